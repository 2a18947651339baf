//! Fractal-geometry diagnostics for stochastic optimization trajectories.
//!
//! The crate bundles everything needed to evaluate a trajectory-dependent
//! generalization bound for SGD-trained models from first principles:
//!
//! - [`fbm`] — exact-in-distribution simulation of fractional Gaussian noise
//!   and fractional Brownian motion, plus the analytic covariance used as a
//!   ground-truth oracle by the estimators.
//! - [`hurst`] — rescaled-range (R/S) estimation of the Hurst parameter from
//!   scalar series and from high-dimensional gradient-noise matrices.
//! - [`boxdim`] — box-counting dimension of point clouds and trajectories.
//! - [`miniball`] — approximate minimum enclosing balls in high dimension
//!   (core-set iteration) with an exact low-dimensional oracle.
//! - [`bound`] — the trajectory Rademacher bound and the full high-probability
//!   generalization bound assembled from estimated quantities.
//! - [`indicators`] — competing generalization indicators: heavy-tail index of
//!   gradient noise, spectral power-law index, and norm-based measures.
//! - [`sde`] — Euler–Maruyama integration of fBm-driven SDEs on analytic
//!   landscapes.
//! - [`trainer`] — a self-contained MLP + SGD trainer that emits gradient-noise
//!   series, per-example loss vectors, and final weights at desk scale.
//! - [`logfmt`] — the binary/CSV trajectory-log format shared by the CLI.
//! - [`pipeline`] — the end-to-end analysis turning a training run into a
//!   bound report plus indicator report, and parameter sweeps over it.

pub mod bound;
pub mod boxdim;
pub mod error;
pub mod fbm;
pub mod hurst;
pub mod indicators;
pub mod logfmt;
pub mod miniball;
pub mod pipeline;
pub mod sde;
pub mod series;
pub mod trainer;

pub use error::{Error, Result};
