//! Concrete dual problems: covering (market basket), Elastic-Net logistic
//! regression and reduced-rank multi-task regression.

mod basket;
mod logistic;
mod matrix;

pub use basket::{Basket, BasketSpec};
pub use logistic::{sigmoid, softplus, Logistic, LogisticSpec, BOUNDARY_EPS};
pub use matrix::{MatrixObjective, MatrixSpec, RankReport};
