//! Event recognition: attention pooling over encoded trajectories and a
//! two-level classifier (5 types, 15 subtypes).

pub mod forecast;
pub mod model;
pub mod report;
pub mod taxonomy;

pub use forecast::{classifier_input, forecast_event, quantile, EventForecast, EventSummary, Spread};
pub use model::{
    argmax, event_loss, hierarchical_loss, AttentionPool, ConstantModel, EventClassifier, EventConfig, EventModel,
    EventNet, EventOutputs, EventPrediction, EventSample,
};
pub use report::{prediction_csv, prediction_csv_header, prediction_json, summary_csv, PredictionRecord};
pub use taxonomy::{EventLabel, Taxonomy, NUM_SUBTYPES, NUM_TYPES, TYPES};
