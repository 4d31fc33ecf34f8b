//! Benford's-law divergence features from JPEG-model coefficients of
//! grayscale images, and from-scratch classifiers that separate image
//! sources from those features.
//!
//! The pipeline runs in two stages joined by a CSV file:
//!
//! 1. [`ingest`] loads `<root>/<class>/*.{pgm,png}`; [`jpeg`] quantizes each
//!    image at several quality factors; [`benford`] compares the first-digit
//!    distribution of the nonzero AC coefficients with a generalized Benford
//!    model; [`features`] collects one divergence per quality factor.
//! 2. [`learn`] splits the table, trains Naive Bayes, CART, logistic
//!    regression and a small 1-D CNN, and scores them.

pub mod benford;
pub mod features;
pub mod ingest;
pub mod jpeg;
pub mod learn;
pub mod synthetic;

pub use benford::{
    chi_square_divergence, digit_distribution, first_digit, fit_gbl_params, generalized_benford,
    standard_benford, BenfordError, DigitDistribution, DigitHistogram, FitConfig, FitResult,
    GblParams, ParamTable,
};
pub use features::{build_dataset, read_csv, write_csv, Dataset, FeatureConfig, FeatureVector};
pub use ingest::{load_image, scan_dataset, GrayImage, LabeledImageSet};
pub use jpeg::{extract_coefficients, forward_dct_block, quant_table_for_qf, CoefficientStream};
pub use learn::{
    evaluate, predict, stratified_split, train_cnn, train_decision_tree, train_logistic_regression,
    train_model, train_naive_bayes, Classifier, EvalReport, Hyperparameters, LearnError, ModelKind,
    SplitConfig, TrainedModel,
};
pub use synthetic::ClusterSpec;
