//! Alias substitution written independently of the library resolver, so the
//! two can be compared.

use serde_json::Value;

fn is_word(c: char) -> bool {
    c.is_alphanumeric()
}

fn lower(c: char) -> char {
    c.to_lowercase().next().unwrap_or(c)
}

/// Does `alias` occur in `text` at char position `i` as a whole phrase?
fn occurs_at(text: &[char], i: usize, alias: &[char]) -> bool {
    if i + alias.len() > text.len() || alias.is_empty() {
        return false;
    }
    if !text[i..i + alias.len()].iter().zip(alias).all(|(a, b)| lower(*a) == lower(*b)) {
        return false;
    }
    let before_ok = !is_word(alias[0]) || i == 0 || !is_word(text[i - 1]);
    let end = i + alias.len();
    let after_ok = !is_word(alias[alias.len() - 1]) || end == text.len() || !is_word(text[end]);
    before_ok && after_ok
}

fn render(target: &Value) -> Option<String> {
    match target {
        Value::String(s) => Some(s.clone()),
        Value::Array(items) => {
            let names: Vec<&str> = items.iter().filter_map(Value::as_str).collect();
            match names.len() {
                0 => None,
                1 => Some(names[0].to_string()),
                2 => Some(format!("{} and {}", names[0], names[1])),
                n => Some(format!("{}, and {}", names[..n - 1].join(", "), names[n - 1])),
            }
        }
        _ => None,
    }
}

/// Replace aliases from a `RESOLVED_ENTITIES` object. At each position the
/// longest alias wins; null-mapped aliases are copied through unchanged.
pub fn substitute(text: &str, resolved: &serde_json::Map<String, Value>) -> String {
    let chars: Vec<char> = text.chars().collect();
    let aliases: Vec<(Vec<char>, Option<String>)> = resolved
        .iter()
        .map(|(k, v)| (k.chars().collect(), render(v)))
        .collect();
    let mut out = String::new();
    let mut i = 0;
    while i < chars.len() {
        let best = aliases
            .iter()
            .filter(|(a, _)| occurs_at(&chars, i, a))
            .max_by(|x, y| x.0.len().cmp(&y.0.len()).then_with(|| y.0.cmp(&x.0)));
        match best {
            Some((a, Some(rep))) => {
                out.push_str(rep);
                i += a.len();
            }
            Some((a, None)) => {
                out.extend(&chars[i..i + a.len()]);
                i += a.len();
            }
            None => {
                out.push(chars[i]);
                i += 1;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn longest_alias_wins() {
        let m = json!({"the driver": "L.R.C.", "the driver's brother": "J.T.R.", "the men": null});
        let out = substitute("The driver's brother met the driver and the men.", m.as_object().unwrap());
        assert_eq!(out, "J.T.R. met L.R.C. and the men.");
    }
}
