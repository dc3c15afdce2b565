use std::fmt::Write;

use crate::sparql::{QueryMode, SparqlError, FREEBASE_NS, WIKIDATA_DIRECT_NS, WIKIDATA_ENTITY_NS};
use crate::types::{Direction, EntityRef, PropertyRef, SchemaDialect};

/// Where Freebase labels come from. Wikidata always uses English
/// `rdfs:label`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LabelSource {
    #[default]
    RdfsLabel,
    TypeObjectName,
}

#[derive(Debug, Clone)]
pub struct AdjacencyQuery<'a> {
    pub dialect: SchemaDialect,
    pub entity: &'a EntityRef,
    pub direction: Direction,
    pub filter: Option<&'a [PropertyRef]>,
    pub mode: QueryMode,
    pub limit: usize,
    pub labels: LabelSource,
}

pub fn build_adjacency_query(
    dialect: SchemaDialect,
    entity: &EntityRef,
    direction: Direction,
    filter: Option<&[PropertyRef]>,
    mode: QueryMode,
    limit: usize,
) -> Result<String, SparqlError> {
    AdjacencyQuery {
        dialect,
        entity,
        direction,
        filter,
        mode,
        limit,
        labels: LabelSource::default(),
    }
    .build()
}

impl AdjacencyQuery<'_> {
    pub fn build(&self) -> Result<String, SparqlError> {
        if self.limit == 0 {
            return Err(SparqlError::InvalidInput("LIMIT must be at least 1".into()));
        }
        let filter = match self.filter {
            Some([]) => None,
            f => f,
        };
        if filter.is_some() && self.mode == QueryMode::DistinctProperties {
            return Err(SparqlError::InvalidInput(
                "property filter cannot be combined with distinct-properties mode".into(),
            ));
        }
        let entity = crate::types::parse_entity_ref(&self.entity.id, self.dialect)?;
        if let Some(f) = filter {
            for p in f {
                crate::types::parse_property_ref(&p.id, self.dialect)?;
            }
        }

        let (entity_term, prefix) = match self.dialect {
            SchemaDialect::Freebase => (format!("ns:{}", entity.id), "ns:"),
            // Already prefixed: `wd:Q5089`, `wdt:P17`.
            SchemaDialect::Wikidata => (entity.id.clone(), ""),
        };

        let mut q = String::new();
        match self.dialect {
            SchemaDialect::Freebase => {
                writeln!(q, "PREFIX ns: <{FREEBASE_NS}>").unwrap();
            }
            SchemaDialect::Wikidata => {
                writeln!(q, "PREFIX wd: <{WIKIDATA_ENTITY_NS}>").unwrap();
                writeln!(q, "PREFIX wdt: <{WIKIDATA_DIRECT_NS}>").unwrap();
                writeln!(q, "PREFIX wikibase: <http://wikiba.se/ontology#>").unwrap();
            }
        }
        writeln!(q, "PREFIX rdfs: <http://www.w3.org/2000/01/rdf-schema#>").unwrap();
        match self.mode {
            QueryMode::Rows => q.push_str("SELECT ?property ?propertyLabel ?value ?valueLabel\n"),
            QueryMode::DistinctProperties => {
                q.push_str("SELECT DISTINCT ?property ?propertyLabel\n")
            }
        }
        q.push_str("WHERE {\n");
        if let Some(f) = filter {
            let ids: Vec<String> = f.iter().map(|p| format!("{prefix}{}", p.id)).collect();
            writeln!(q, "  VALUES ?property {{ {} }}", ids.join(" ")).unwrap();
        }
        match self.direction {
            Direction::Outgoing => writeln!(q, "  {entity_term} ?property ?value .").unwrap(),
            Direction::Incoming => writeln!(q, "  ?value ?property {entity_term} .").unwrap(),
        }
        match self.dialect {
            SchemaDialect::Freebase => {
                writeln!(q, "  FILTER(STRSTARTS(STR(?property), \"{FREEBASE_NS}\"))").unwrap();
                let label_pred = match self.labels {
                    LabelSource::RdfsLabel => "rdfs:label",
                    LabelSource::TypeObjectName => "ns:type.object.name",
                };
                let lang = |var: &str| {
                    format!("FILTER(LANG(?{var}) = \"\" || LANGMATCHES(LANG(?{var}), \"en\"))")
                };
                writeln!(
                    q,
                    "  OPTIONAL {{ ?property {label_pred} ?propertyLabel . {} }}",
                    lang("propertyLabel")
                )
                .unwrap();
                if self.mode == QueryMode::Rows {
                    writeln!(
                        q,
                        "  OPTIONAL {{ ?value {label_pred} ?valueLabel . {} }}",
                        lang("valueLabel")
                    )
                    .unwrap();
                }
            }
            SchemaDialect::Wikidata => {
                q.push_str("  ?propertyEntity wikibase:directClaim ?property .\n");
                q.push_str("  OPTIONAL { ?propertyEntity rdfs:label ?propertyLabel . FILTER(LANG(?propertyLabel) = \"en\") }\n");
                if self.mode == QueryMode::Rows {
                    q.push_str("  OPTIONAL { ?value rdfs:label ?valueLabel . FILTER(LANG(?valueLabel) = \"en\") }\n");
                }
            }
        }
        q.push_str("}\n");
        writeln!(q, "LIMIT {}", self.limit).unwrap();
        Ok(q)
    }
}
