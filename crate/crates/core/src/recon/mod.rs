//! Mask evaluation: a transposed-convolution decoder trained to rebuild the
//! full image from the selected pixels, a ridge-regression baseline, gradient
//! verification and the random/grid baseline masks.

mod checkpoint;
mod decoder;
mod gradcheck;
mod linalg;
mod masks;
mod ridge;
mod train;

pub use checkpoint::{encode_pgm, load_checkpoint, manifest, save_checkpoint, tile_row, write_pgm};
pub use decoder::{DecoderModel, DecoderShape, Forward};
pub use gradcheck::{grad_check, nudge_relu_kinks, GradCheckReport};
pub use linalg::Scalar;
pub use masks::{grid_mask, random_mask};
pub use ridge::ridge_decode;
pub use train::{eval_mse, train_decoder, Adam, TrainConfig, TrainedDecoder};
