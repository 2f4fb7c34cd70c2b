//! Base learners for the cascade: Gaussian naive Bayes, KNN, CART, random
//! forest and SAMME AdaBoost, plus class weighting.

mod adaboost;
mod cart;
mod forest;
mod gnb;
mod knn;
mod weighting;

pub use adaboost::{
    fit_adaboost_samme, samme_alpha, AdaBoostConfig, AdaBoostModel, BoostRound, ALPHA_CAP,
};
pub use cart::{fit_cart, CartConfig, CartTree, Node};
pub use forest::{fit_random_forest, ForestConfig, ForestModel};
pub use gnb::{fit_gaussian_nb, GaussianNb, VARIANCE_FLOOR};
pub use knn::{fit_knn, KnnModel};
pub use weighting::{class_weights, ClassWeighting};
