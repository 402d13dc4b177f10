//! Feature schemas loaded from the versioned manifests in `schemas/`.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::util::sha256_hex;
use crate::{Error, Result};

const NETFLOW_MANIFEST: &str = include_str!("../../schemas/netflow_v2_style.v1.tsv");
const CIC_MANIFEST: &str = include_str!("../../schemas/cic_style.v1.tsv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemaName {
    NetflowV2Style,
    CicStyle,
}

impl SchemaName {
    pub const ALL: [SchemaName; 2] = [SchemaName::NetflowV2Style, SchemaName::CicStyle];

    pub fn as_str(&self) -> &'static str {
        match self {
            SchemaName::NetflowV2Style => "netflow_v2_style",
            SchemaName::CicStyle => "cic_style",
        }
    }

    /// Short tag used for dataset labels in reports ("NF", "CIC").
    pub fn tag(&self) -> &'static str {
        match self {
            SchemaName::NetflowV2Style => "NF",
            SchemaName::CicStyle => "CIC",
        }
    }
}

impl fmt::Display for SchemaName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchemaName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "netflow_v2_style" | "netflow" | "nf" => Ok(SchemaName::NetflowV2Style),
            "cic_style" | "cic" => Ok(SchemaName::CicStyle),
            other => Err(Error::Schema(format!("unknown schema '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Identifier,
    Learnable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
    pub unit: String,
}

/// Ordered column list. Identifier columns always precede learnable ones.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub name: SchemaName,
    pub version: u32,
    pub columns: Vec<Column>,
}

impl FeatureSchema {
    /// Parses a manifest: `#` comments, `schema` and `version` lines, then
    /// one `name<TAB>kind<TAB>unit` line per column.
    pub fn parse_manifest(text: &str) -> Result<Self> {
        let mut name = None;
        let mut version = None;
        let mut columns = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let bad = || Error::Schema(format!("manifest line {}: '{line}'", lineno + 1));
            match fields.as_slice() {
                ["schema", n] => name = Some(n.parse::<SchemaName>()?),
                ["version", v] => version = Some(v.parse::<u32>().map_err(|_| bad())?),
                [col, kind, unit] => {
                    let kind = match *kind {
                        "identifier" => ColumnKind::Identifier,
                        "learnable" => ColumnKind::Learnable,
                        _ => return Err(bad()),
                    };
                    columns.push(Column { name: col.to_string(), kind, unit: unit.to_string() });
                }
                _ => return Err(bad()),
            }
        }
        let schema = Self {
            name: name.ok_or_else(|| Error::Schema("manifest lacks a schema line".into()))?,
            version: version.ok_or_else(|| Error::Schema("manifest lacks a version line".into()))?,
            columns,
        };
        schema.validate()?;
        Ok(schema)
    }

    fn validate(&self) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for c in &self.columns {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::Schema(format!("duplicate column '{}'", c.name)));
            }
        }
        let first_learnable = self
            .columns
            .iter()
            .position(|c| c.kind == ColumnKind::Learnable)
            .unwrap_or(self.columns.len());
        if self.columns[first_learnable..].iter().any(|c| c.kind == ColumnKind::Identifier) {
            return Err(Error::Schema("identifier columns must precede learnable columns".into()));
        }
        Ok(())
    }

    pub fn netflow() -> &'static FeatureSchema {
        static S: OnceLock<FeatureSchema> = OnceLock::new();
        S.get_or_init(|| FeatureSchema::parse_manifest(NETFLOW_MANIFEST).expect("bundled manifest"))
    }

    pub fn cic() -> &'static FeatureSchema {
        static S: OnceLock<FeatureSchema> = OnceLock::new();
        S.get_or_init(|| FeatureSchema::parse_manifest(CIC_MANIFEST).expect("bundled manifest"))
    }

    pub fn builtin(name: SchemaName) -> &'static FeatureSchema {
        match name {
            SchemaName::NetflowV2Style => Self::netflow(),
            SchemaName::CicStyle => Self::cic(),
        }
    }

    /// Raw manifest text for a bundled schema.
    pub fn manifest_text(name: SchemaName) -> &'static str {
        match name {
            SchemaName::NetflowV2Style => NETFLOW_MANIFEST,
            SchemaName::CicStyle => CIC_MANIFEST,
        }
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn identifier_count(&self) -> usize {
        self.columns.iter().filter(|c| c.kind == ColumnKind::Identifier).count()
    }

    pub fn learnable_count(&self) -> usize {
        self.width() - self.identifier_count()
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|c| c.name.as_str())
    }

    pub fn identifier_names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().filter(|c| c.kind == ColumnKind::Identifier).map(|c| c.name.as_str())
    }

    pub fn learnable_names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().filter(|c| c.kind == ColumnKind::Learnable).map(|c| c.name.as_str())
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    /// Index of a learnable column within the learnable-only value vector.
    pub fn learnable_index(&self, name: &str) -> Option<usize> {
        self.learnable_names().position(|n| n == name)
    }

    /// The same schema without identifier columns.
    pub fn learnable_only(&self) -> FeatureSchema {
        FeatureSchema {
            name: self.name,
            version: self.version,
            columns: self.columns.iter().filter(|c| c.kind == ColumnKind::Learnable).cloned().collect(),
        }
    }

    /// Hash of schema name, version and ordered column names.
    pub fn fingerprint(&self) -> String {
        let mut text = format!("{}\n{}\n", self.name, self.version);
        for c in &self.columns {
            text.push_str(&c.name);
            text.push('\n');
        }
        sha256_hex(text.as_bytes())[..16].to_string()
    }

    /// Finds the bundled schema whose column list (full or learnable-only)
    /// equals `names`.
    pub fn identify(names: &[&str]) -> Result<FeatureSchema> {
        for name in SchemaName::ALL {
            let full = Self::builtin(name);
            if full.column_names().eq(names.iter().copied()) {
                return Ok(full.clone());
            }
            let learnable = full.learnable_only();
            if learnable.column_names().eq(names.iter().copied()) {
                return Ok(learnable);
            }
        }
        Err(Error::Schema("CSV header does not match any known schema".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_manifest_sizes() {
        assert_eq!(FeatureSchema::netflow().width(), 43);
        assert_eq!(FeatureSchema::cic().width(), 83);
        assert_eq!(FeatureSchema::netflow().identifier_count(), 4);
        assert_eq!(FeatureSchema::cic().identifier_count(), 6);
    }

    #[test]
    fn identifiers_are_the_flow_identity_columns() {
        let cic: Vec<_> = FeatureSchema::cic().identifier_names().collect();
        assert_eq!(cic, ["Flow ID", "Src IP", "Src Port", "Dst IP", "Dst Port", "Timestamp"]);
        let nf: Vec<_> = FeatureSchema::netflow().identifier_names().collect();
        assert_eq!(nf, ["IPV4_SRC_ADDR", "L4_SRC_PORT", "IPV4_DST_ADDR", "L4_DST_PORT"]);
    }

    #[test]
    fn names_referenced_in_analysis_exist() {
        let nf = FeatureSchema::netflow();
        for n in [
            "TCP_WIN_MAX_OUT",
            "LONGEST_FLOW_PKT",
            "SHORTEST_FLOW_PKT",
            "FLOW_DURATION_MILLISECONDS",
            "L7_PROTO",
            "MIN_TTL",
            "MAX_TTL",
        ] {
            assert!(nf.index_of(n).is_some(), "{n}");
        }
        let cic = FeatureSchema::cic();
        for n in [
            "Fwd Seg Size Min",
            "Fwd Packets/s",
            "Bwd Packets/s",
            "Idle Mean",
            "Idle Min",
            "Idle Max",
            "Fwd IAT Min",
            "Fwd IAT Mean",
            "Fwd Header Length",
            "Bwd Header Length",
            "SYN Flag Count",
            "Protocol",
        ] {
            assert!(cic.index_of(n).is_some(), "{n}");
        }
    }

    #[test]
    fn manifest_rejects_duplicates_and_misordered_identifiers() {
        let dup = "schema\tcic_style\nversion\t1\na\tlearnable\tx\na\tlearnable\tx\n";
        assert!(FeatureSchema::parse_manifest(dup).is_err());
        let late_id = "schema\tcic_style\nversion\t1\na\tlearnable\tx\nb\tidentifier\tx\n";
        assert!(FeatureSchema::parse_manifest(late_id).is_err());
    }

    #[test]
    fn identify_full_and_learnable_headers() {
        let cic = FeatureSchema::cic();
        let full: Vec<&str> = cic.column_names().collect();
        assert_eq!(FeatureSchema::identify(&full).unwrap(), *cic);
        let learn = cic.learnable_only();
        let names: Vec<&str> = learn.column_names().collect();
        assert_eq!(FeatureSchema::identify(&names).unwrap().width(), 77);
        assert_ne!(learn.fingerprint(), cic.fingerprint());
    }
}
