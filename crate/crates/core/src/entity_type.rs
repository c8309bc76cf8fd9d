//! The seven entity types tracked through coreference and extraction.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Entity categories relevant to smuggling-network analysis.
///
/// Declaration order is the default processing order for both the
/// per-type coreference loop and the sequential extraction prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EntityType {
    Person,
    Location,
    Organization,
    Route,
    MeansOfTransportation,
    MeansOfCommunication,
    SmuggledItems,
}

impl EntityType {
    pub const ALL: [EntityType; 7] = [
        EntityType::Person,
        EntityType::Location,
        EntityType::Organization,
        EntityType::Route,
        EntityType::MeansOfTransportation,
        EntityType::MeansOfCommunication,
        EntityType::SmuggledItems,
    ];

    /// Human-readable name, as it appears in prompts and graph exports.
    pub fn name(self) -> &'static str {
        match self {
            EntityType::Person => "Person",
            EntityType::Location => "Location",
            EntityType::Organization => "Organization",
            EntityType::Route => "Route",
            EntityType::MeansOfTransportation => "Means of Transportation",
            EntityType::MeansOfCommunication => "Means of Communication",
            EntityType::SmuggledItems => "Smuggled Items",
        }
    }

    /// File-system friendly identifier used for prompt files and run directories.
    pub fn slug(self) -> &'static str {
        match self {
            EntityType::Person => "person",
            EntityType::Location => "location",
            EntityType::Organization => "organization",
            EntityType::Route => "route",
            EntityType::MeansOfTransportation => "means_of_transportation",
            EntityType::MeansOfCommunication => "means_of_communication",
            EntityType::SmuggledItems => "smuggled_items",
        }
    }

    pub fn definition(self) -> &'static str {
        match self {
            EntityType::Person => {
                "A specific human individual who takes part in or is directly connected to the \
                 events: smugglers, drivers, recruiters, passengers, defendants, witnesses and \
                 law-enforcement officers acting in the field. Names, initials and personal \
                 titles attached to a name (\"Agent S.P.\") identify a Person."
            }
            EntityType::Location => {
                "A physical place where events occur or that people move between: cities, \
                 border crossings, checkpoints, ranches, stash houses, street addresses, \
                 parking lots and buildings identified by use or address."
            }
            EntityType::Organization => {
                "A named group acting as a unit in the events: criminal organizations, \
                 smuggling rings, companies, and enforcement agencies conducting operations. \
                 Procedural bodies such as courts and juries are not target organizations."
            }
            EntityType::Route => {
                "A path used to move people or goods: highways, interstates, roads, river \
                 crossings, trails and directional travel corridors."
            }
            EntityType::MeansOfTransportation => {
                "A vehicle or conveyance used to move people or goods: cars, trucks, trailers, \
                 buses, boats and aircraft, including identifying attributes such as color, \
                 make or model."
            }
            EntityType::MeansOfCommunication => {
                "A device, service or channel used to coordinate: cell phones, radios, \
                 messaging applications, pagers and social media accounts."
            }
            EntityType::SmuggledItems => {
                "Goods, money or documents moved, paid or concealed as part of the smuggling \
                 activity: cash fees, drugs, weapons and fraudulent identity documents."
            }
        }
    }

    pub fn examples(self) -> &'static [&'static str] {
        match self {
            EntityType::Person => &["L.R.C.", "Border Patrol Agent S.P.", "M.D.J.G."],
            EntityType::Location => &["Laredo, Texas", "the Cotulla checkpoint", "a ranch near Hebbronville"],
            EntityType::Organization => &["U.S. Border Patrol", "the Gulf Cartel", "a smuggling ring"],
            EntityType::Route => &["Highway 77", "Interstate 35", "the Rio Grande crossing"],
            EntityType::MeansOfTransportation => &["white pickup truck", "tractor-trailer", "silver sedan"],
            EntityType::MeansOfCommunication => &["cell phone", "WhatsApp", "two-way radio"],
            EntityType::SmuggledItems => &["$2,500 in cash", "forged birth certificates", "marijuana bundles"],
        }
    }

    fn normalized_key(s: &str) -> String {
        s.trim()
            .chars()
            .map(|c| if c == '_' || c == '-' { ' ' } else { c.to_ascii_lowercase() })
            .collect::<String>()
            .split_whitespace()
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl fmt::Display for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown entity type `{0}`")]
pub struct UnknownEntityType(pub String);

impl FromStr for EntityType {
    type Err = UnknownEntityType;

    /// Accepts display names and slugs, case-insensitively ("MEANS OF TRANSPORTATION",
    /// "means_of_transportation", "Means-of-Transportation").
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = Self::normalized_key(s);
        EntityType::ALL
            .into_iter()
            .find(|t| Self::normalized_key(t.name()) == key)
            .ok_or_else(|| UnknownEntityType(s.to_string()))
    }
}

impl Serialize for EntityType {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for EntityType {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exactly_seven_types_in_listing_order() {
        let names: Vec<_> = EntityType::ALL.iter().map(|t| t.name()).collect();
        assert_eq!(
            names,
            [
                "Person",
                "Location",
                "Organization",
                "Route",
                "Means of Transportation",
                "Means of Communication",
                "Smuggled Items"
            ]
        );
    }

    #[test]
    fn parses_names_and_slugs() {
        for t in EntityType::ALL {
            assert_eq!(t.name().parse::<EntityType>().unwrap(), t);
            assert_eq!(t.slug().parse::<EntityType>().unwrap(), t);
            assert_eq!(t.name().to_uppercase().parse::<EntityType>().unwrap(), t);
        }
        assert!("Vehicle".parse::<EntityType>().is_err());
    }
}
