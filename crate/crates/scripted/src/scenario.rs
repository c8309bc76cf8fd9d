//! Ground truth for the synthetic case document.

use linkkg::EntityType;
use linkkg::EntityType::*;

pub struct Canonical {
    pub entity_type: EntityType,
    pub name: &'static str,
    pub description: &'static str,
}

/// A role or plural reference and the canonical names it denotes.
/// An empty target list means the reference is underspecified.
pub struct Alias {
    pub entity_type: EntityType,
    pub phrase: &'static str,
    pub targets: &'static [&'static str],
}

/// An entity the extraction model reports, under the first name whose
/// trigger phrase occurs in the text.
pub struct GraphEntity {
    pub id: &'static str,
    pub entity_type: EntityType,
    pub description: &'static str,
    /// `(trigger, emitted name)` in priority order.
    pub surfaces: &'static [(&'static str, &'static str)],
}

pub struct GraphRelation {
    pub source: &'static str,
    pub target: &'static str,
    pub description: &'static str,
    pub strength: u8,
}

pub struct Scenario {
    pub canonicals: &'static [Canonical],
    pub aliases: &'static [Alias],
    pub entities: &'static [GraphEntity],
    pub relations: &'static [GraphRelation],
}

macro_rules! canon {
    ($t:expr, $n:expr, $d:expr) => {
        Canonical { entity_type: $t, name: $n, description: $d }
    };
}

macro_rules! alias {
    ($t:expr, $p:expr, [$($x:expr),*]) => {
        Alias { entity_type: $t, phrase: $p, targets: &[$($x),*] }
    };
}

macro_rules! ent {
    ($id:expr, $t:expr, $d:expr, [$(($a:expr, $b:expr)),+]) => {
        GraphEntity { id: $id, entity_type: $t, description: $d, surfaces: &[$(($a, $b)),+] }
    };
}

macro_rules! rel {
    ($s:expr, $t:expr, $d:expr, $w:expr) => {
        GraphRelation { source: $s, target: $t, description: $d, strength: $w }
    };
}

pub static SYNTHETIC: Scenario = Scenario {
    canonicals: &[
        canon!(Person, "S.P.", "U.S. Border Patrol agent who stopped the truck and seized the phone"),
        canon!(Person, "A.B.", "U.S. Border Patrol agent who joined the stop and found the passengers"),
        canon!(Person, "L.R.C.", "driver of the white pickup truck, recruited by J.T.R."),
        canon!(Person, "M.D.J.G.", "defendant who rode in the truck and carried the forged documents"),
        canon!(Person, "J.T.R.", "smuggling coordinator linked to Los Zetas who directed trips by WhatsApp"),
        canon!(Location, "Laredo", "Texas border city where the trip began"),
        canon!(Location, "1200 Elm Street", "stash house in Laredo where the passengers waited"),
        canon!(Location, "Cotulla Border Patrol Checkpoint", "checkpoint on Interstate 35 that the driver avoided"),
        canon!(Location, "Encinal", "town where the driver left Interstate 35"),
        canon!(Location, "Catarina", "ranch destination claimed by the driver"),
        canon!(Location, "San Antonio", "city where the truck was purchased"),
        canon!(Location, "Laredo North Border Patrol Station", "station where the passengers were processed"),
        canon!(Organization, "Los Zetas", "cartel that bought the truck and charged fees for the route"),
        canon!(Organization, "U.S. Border Patrol", "agency whose agents made the stop"),
        canon!(Route, "Interstate 35", "highway north from Laredo"),
        canon!(Route, "Farm Road 133", "road used to bypass the checkpoint"),
        canon!(Route, "Highway 83", "highway at the intersection where Agent A.B. was parked"),
        canon!(MeansOfTransportation, "white Ford F-150 pickup truck", "truck used to carry the passengers"),
        canon!(MeansOfCommunication, "Samsung cell phone", "phone that received the trip instructions"),
        canon!(MeansOfCommunication, "WhatsApp", "messaging application used by J.T.R."),
        canon!(SmuggledItems, "forged immigration documents", "counterfeit cards and altered certificates for the passengers"),
        canon!(SmuggledItems, "$2,500 in cash", "smuggling fee paid by each passenger"),
        canon!(SmuggledItems, "$18,000 in cash", "cash seized from the stash house closet"),
    ],
    aliases: &[
        alias!(Person, "the agents", ["S.P.", "A.B."]),
        alias!(Person, "the driver", ["L.R.C."]),
        alias!(Person, "the defendant", ["M.D.J.G."]),
        alias!(Person, "the coordinator", ["J.T.R."]),
        alias!(Person, "the treasurer", []),
        alias!(Person, "the passengers", []),
        alias!(Person, "the male passengers", []),
        alias!(Person, "the female passengers", []),
        alias!(Location, "the stash house", ["1200 Elm Street"]),
        alias!(Location, "the checkpoint", ["Cotulla Border Patrol Checkpoint"]),
        alias!(Organization, "the cartel", ["Los Zetas"]),
        alias!(Route, "the interstate", ["Interstate 35"]),
        alias!(Route, "the route", []),
        alias!(MeansOfTransportation, "the truck", ["white Ford F-150 pickup truck"]),
        alias!(MeansOfCommunication, "the phone", ["Samsung cell phone"]),
        alias!(SmuggledItems, "the documents", ["forged immigration documents"]),
        alias!(SmuggledItems, "the smuggling fee", ["$2,500 in cash"]),
        alias!(SmuggledItems, "the cash", []),
    ],
    entities: &[
        ent!("sp", Person, "Border Patrol agent who stopped the truck", [("Agent S.P.", "Agent S.P."), ("S.P.", "S.P.")]),
        ent!("ab", Person, "Border Patrol agent who assisted with the stop", [("Agent A.B.", "Agent A.B."), ("A.B.", "A.B.")]),
        ent!("lrc", Person, "driver of the pickup truck", [("L.R.C.", "L.R.C.")]),
        ent!("mdjg", Person, "defendant riding in the truck", [("M.D.J.G.", "M.D.J.G.")]),
        ent!("jtr", Person, "coordinator of the smuggling trips", [("J.T.R.", "J.T.R.")]),
        ent!("laredo", Location, "border city", [("Laredo", "Laredo")]),
        ent!("elm", Location, "stash house", [("1200 Elm Street", "1200 Elm Street")]),
        ent!("cotulla", Location, "Border Patrol checkpoint", [("Cotulla Border Patrol Checkpoint", "Cotulla Border Patrol Checkpoint")]),
        ent!("encinal", Location, "town near the interstate exit", [("Encinal", "Encinal")]),
        ent!("catarina", Location, "claimed destination", [("Catarina", "Catarina")]),
        ent!("sanantonio", Location, "city where the truck was bought", [("San Antonio", "San Antonio")]),
        ent!("station", Location, "processing station", [("Laredo North Border Patrol Station", "Laredo North Border Patrol Station")]),
        ent!("zetas", Organization, "cartel behind the smuggling network", [("Los Zetas cartel", "Los Zetas cartel"), ("Los Zetas", "Los Zetas")]),
        ent!("usbp", Organization, "federal agency conducting the stop", [("U.S. Border Patrol", "U.S. Border Patrol")]),
        ent!("court", Organization, "court handling the case", [("U.S. District Court for the Southern District of Texas", "U.S. District Court for the Southern District of Texas")]),
        ent!("grandjury", Organization, "body that returned the indictment", [("grand jury", "grand jury")]),
        ent!("proceedings", Organization, "ongoing case proceedings", [("judicial proceedings", "judicial proceedings")]),
        ent!("i35", Route, "interstate north from Laredo", [("Interstate 35", "Interstate 35")]),
        ent!("fm133", Route, "road used to bypass the checkpoint", [("Farm Road 133", "Farm Road 133")]),
        ent!("hwy83", Route, "highway east of the interstate", [("Highway 83", "Highway 83")]),
        ent!("truck", MeansOfTransportation, "pickup truck carrying the passengers", [("white Ford F-150 pickup truck", "white Ford F-150 pickup truck")]),
        ent!("f150", MeansOfTransportation, "truck used on earlier trips", [("the F-150", "F-150")]),
        ent!("phone", MeansOfCommunication, "phone receiving instructions", [("Samsung cell phone", "Samsung cell phone")]),
        ent!("whatsapp", MeansOfCommunication, "messaging application", [("WhatsApp", "WhatsApp")]),
        ent!("docs", SmuggledItems, "fraudulent identity documents", [("forged immigration documents", "forged immigration documents")]),
        ent!("fee", SmuggledItems, "per-passenger smuggling fee", [("$2,500 in cash", "$2,500 in cash")]),
        ent!("seized", SmuggledItems, "cash seized in the search", [("$18,000 in cash", "$18,000 in cash")]),
        ent!("ledger", SmuggledItems, "ledger of payments", [("a ledger", "ledger"), ("the ledger", "ledger")]),
    ],
    relations: &[
        rel!("lrc", "truck", "L.R.C. drove the pickup truck", 9),
        rel!("lrc", "i35", "L.R.C. drove north on Interstate 35", 7),
        rel!("lrc", "fm133", "L.R.C. exited onto Farm Road 133 to avoid the checkpoint", 7),
        rel!("lrc", "laredo", "L.R.C. lives in Laredo", 4),
        rel!("mdjg", "phone", "M.D.J.G. carried the phone that received instructions", 8),
        rel!("mdjg", "docs", "M.D.J.G. carried the forged documents", 8),
        rel!("mdjg", "truck", "M.D.J.G. rode in the truck", 6),
        rel!("jtr", "whatsapp", "J.T.R. sent instructions through WhatsApp", 8),
        rel!("jtr", "zetas", "J.T.R. is linked to and paid the cartel", 7),
        rel!("jtr", "lrc", "J.T.R. recruited L.R.C. as the driver", 8),
        rel!("jtr", "fee", "J.T.R. set the smuggling fee", 7),
        rel!("sp", "truck", "The agent stopped the truck", 7),
        rel!("sp", "phone", "The agent seized the phone", 6),
        rel!("ab", "sp", "The agents conducted the stop together", 5),
        rel!("elm", "laredo", "The stash house is in Laredo", 6),
        rel!("zetas", "truck", "The cartel purchased the truck", 6),
        rel!("cotulla", "i35", "The checkpoint sits on Interstate 35", 5),
        rel!("court", "mdjg", "The court ordered M.D.J.G. detained", 4),
        rel!("grandjury", "mdjg", "The grand jury indicted M.D.J.G.", 4),
    ],
};

impl Scenario {
    pub fn canonical(&self, t: EntityType, name: &str) -> Option<&Canonical> {
        self.canonicals
            .iter()
            .find(|c| c.entity_type == t && c.name.eq_ignore_ascii_case(name))
    }

    pub fn alias(&self, t: EntityType, phrase: &str) -> Option<&Alias> {
        self.aliases
            .iter()
            .find(|a| a.entity_type == t && a.phrase.eq_ignore_ascii_case(phrase))
    }
}
