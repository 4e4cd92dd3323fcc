//! A desk-scale laboratory for GAN training with symmetric adversarial
//! training of the discriminator: alongside the usual update on clean real
//! samples and generated fakes, the discriminator takes one extra ascent
//! step on adversarially perturbed real samples each iteration.
//!
//! The crate is self-contained: a tape-based reverse-mode autodiff core
//! ([`tensor`]), dense MLP generators/discriminators with Adam ([`nn`]),
//! FGSM/PGD/Gaussian perturbation crafting ([`adversarial`]), the training
//! loop ([`engine`]), toy 2-D mixtures and IDX image ingestion ([`data`]),
//! distribution and robustness metrics ([`metrics`]), a brute-force oracle
//! for the robust objective's first-order expansion ([`theory`]), and an
//! experiment runner with config files and CSV/JSON outputs ([`runner`]).
//!
//! Start with the `examples/` directory — each file exercises one
//! capability end to end — or the `asgan` binary for config-driven runs.

pub mod adversarial;
pub mod data;
pub mod engine;
pub mod gradcheck;
pub mod metrics;
pub mod nn;
pub mod runner;
pub mod seeds;
pub mod tensor;
pub mod theory;
