//! Link-prediction pretraining of the encoder and downstream node
//! classification on frozen final-time embeddings.

mod downstream;
mod final_time;
mod loss;
mod pretrain;

pub use downstream::{
    split_auc, train_classifier, train_downstream, Decoder, DownstreamConfig, EpochRecord, NodeModel, RowClassifier,
};
pub use final_time::{final_time_embedding, final_time_embeddings, final_time_epsilon, final_times};
pub use loss::{bce_on_tape, link_loss, link_loss_on_tape, node_loss, PROB_FLOOR};
pub use pretrain::{pretrain, sample_negative, PretrainConfig};
