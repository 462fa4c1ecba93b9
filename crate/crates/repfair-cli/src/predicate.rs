//! Parser for axiom predicates such as `ef & po & ef1:per-round`.

use repfair::axioms::{Axiom, Scope};

/// Parses a conjunction of axiom targets.
///
/// Each `&`-separated conjunct is an axiom name — `ef`, `ef1`,
/// `weak-ef1`, `prop`, `prop1`, `prop11` or `po` — optionally followed by
/// `:overall` or `:per-round`.  Conjuncts without an explicit scope get
/// `default_scope`.
pub fn parse_predicate(text: &str, default_scope: Scope) -> Result<Vec<(Axiom, Scope)>, String> {
    let mut targets = Vec::new();
    for part in text.split('&') {
        let token = part.trim();
        if token.is_empty() {
            return Err(format!("empty conjunct in predicate {text:?}"));
        }
        let (name, scope) = match token.split_once(':') {
            Some((name, scope_text)) => (name.trim(), parse_scope(scope_text.trim())?),
            None => (token, default_scope),
        };
        let axiom = match name.to_ascii_lowercase().as_str() {
            "ef" => Axiom::Ef,
            "ef1" => Axiom::Ef1,
            "weak-ef1" => Axiom::WeakEf1,
            "prop" => Axiom::Prop,
            "prop1" => Axiom::Prop1,
            "prop11" => Axiom::Prop11,
            "po" => Axiom::Po,
            other => return Err(format!("unknown axiom {other:?}")),
        };
        targets.push((axiom, scope));
    }
    Ok(targets)
}

/// Parses `overall` or `per-round`.
pub fn parse_scope(text: &str) -> Result<Scope, String> {
    match text.to_ascii_lowercase().as_str() {
        "overall" => Ok(Scope::Overall),
        "per-round" => Ok(Scope::PerRound),
        other => Err(format!(
            "unknown scope {other:?} (expected overall or per-round)"
        )),
    }
}
