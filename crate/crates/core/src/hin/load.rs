//! Tabular loaders for the instance graph and the optional schema override.
//!
//! `triples.tsv`: one `head<TAB>relation<TAB>tail` per line.
//! `types.tsv`: one `entity<TAB>type` per line; repeated entity lines
//! accumulate types. `#` starts a comment line in both.

use std::collections::BTreeSet;

use super::{InstanceGraph, RelId, SchemaGraph, TypeId, Vocab};
use crate::error::{Error, Result};

fn fields_of(line: &str) -> Option<Vec<&str>> {
    let line = line.trim_end_matches(['\r', '\n']);
    if line.is_empty() || line.starts_with('#') {
        return None;
    }
    Some(line.split('\t').collect())
}

/// Build an [`InstanceGraph`] from the two tabular streams. Vocabularies are
/// assigned densely from 0 in first-appearance order (entities and types
/// from the types stream, relations from the triples stream); duplicate rows
/// are deduplicated.
pub fn load_instance_graph(triples_src: &str, types_src: &str) -> Result<InstanceGraph> {
    let mut entity_vocab = Vocab::default();
    let mut type_vocab = Vocab::default();
    let mut type_map: Vec<Vec<TypeId>> = Vec::new();

    for (lineno, line) in types_src.lines().enumerate() {
        let Some(fields) = fields_of(line) else {
            continue;
        };
        if fields.len() != 2 {
            return Err(Error::Parse {
                line: lineno + 1,
                msg: format!("expected 2 tab-separated fields, got {}", fields.len()),
            });
        }
        let e = entity_vocab.intern(fields[0]) as usize;
        let t = TypeId(type_vocab.intern(fields[1]));
        if type_map.len() <= e {
            type_map.resize(e + 1, Vec::new());
        }
        if !type_map[e].contains(&t) {
            type_map[e].push(t);
        }
    }
    for ts in &mut type_map {
        ts.sort_unstable();
    }

    let mut relation_vocab = Vocab::default();
    let mut triples = BTreeSet::new();
    for (lineno, line) in triples_src.lines().enumerate() {
        let Some(fields) = fields_of(line) else {
            continue;
        };
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: lineno + 1,
                msg: format!("expected 3 tab-separated fields, got {}", fields.len()),
            });
        }
        for name in [fields[0], fields[2]] {
            if entity_vocab.get(name).is_none() {
                return Err(Error::Validation(format!(
                    "entity '{name}' appears in a triple but has no type"
                )));
            }
        }
        let h = entity_vocab.get(fields[0]).unwrap();
        let r = relation_vocab.intern(fields[1]);
        let t = entity_vocab.get(fields[2]).unwrap();
        triples.insert((h, r, t));
    }

    Ok(InstanceGraph {
        entity_vocab,
        relation_vocab,
        type_vocab,
        triples,
        type_map,
        inverse_base: None,
    })
}

/// Merge extra schema edges from an override file with the triple edge
/// format, `src_type<TAB>relation<TAB>dst_type`. Type names must already
/// exist; unseen relation names are added to the vocabulary (they may have
/// no instances).
pub fn load_schema_override(
    g: &mut InstanceGraph,
    s: &mut SchemaGraph,
    src: &str,
) -> Result<()> {
    if g.is_augmented() {
        return Err(Error::Validation(
            "apply schema overrides before inverse augmentation".to_owned(),
        ));
    }
    let mut extra = Vec::new();
    for (lineno, line) in src.lines().enumerate() {
        let Some(fields) = fields_of(line) else {
            continue;
        };
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: lineno + 1,
                msg: format!("expected 3 tab-separated fields, got {}", fields.len()),
            });
        }
        let src_t = g.type_id(fields[0]).ok_or_else(|| {
            Error::Validation(format!("unknown type '{}' in schema override", fields[0]))
        })?;
        let dst_t = g.type_id(fields[2]).ok_or_else(|| {
            Error::Validation(format!("unknown type '{}' in schema override", fields[2]))
        })?;
        let rel = RelId(g.relation_vocab.intern(fields[1]));
        extra.push((src_t, rel, dst_t));
    }
    s.merge_edges(extra);
    Ok(())
}
