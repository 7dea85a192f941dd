//! Query recommendation, term expansion, the diversity/commonness tradeoff and
//! report assembly.

mod expand;
mod findings;
mod outcome;
mod recommend;
mod render;
mod report;
mod tradeoff;

pub use expand::{expand_query_term, SynonymTable};
pub use outcome::OutcomePredicate;
pub use recommend::{rank_queries, QueryRanking, QueryRecommendation, TermKind};
pub use tradeoff::{diversity_commonness_tradeoff, Tradeoff, TradeoffPoint};
pub use render::render_html;
pub use report::{
    metric_spec, AnalysisContext, DatasetInfo, DuplicateSummary, FeatureInput, Finding, InputSummary, Keyed,
    LocalLanguage, MetricEntry, MetricReport, MetricSpec, ReferenceInfo, Section, SectionKind, Sections,
    SkippedItem, Status, ToolInfo, COOCCURRENCE_CAVEAT, DATASET_ANNOTATIONS, METRICS, SCHEMA_VERSION, TOOL_NAME,
};
