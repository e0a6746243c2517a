//! Convolutional sparse coding (CSC) with an optional jointly trained
//! pixelwise linear classifier.
//!
//! An image is modelled as a sum of small dictionary filters convolved with
//! image-sized sparse coefficient maps. The solvers in this crate alternate
//! between three convex subproblems (coding, dictionary learning, classifier
//! fitting), each handled by a scaled ADMM loop whose least-squares step is
//! solved per frequency bin in the Fourier domain.
//!
//! The crate is `no_std` (it needs only `alloc`); file formats and the
//! command line interface live in the companion `scsc-tools` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod admm;
pub mod classifier;
pub mod error;
pub mod image;
pub mod metrics;
pub mod proximal;
pub mod spectral;
pub mod trainer;

mod math;

pub use error::{Error, Result};
pub use image::{FilterBank, Image2D, SparseMapStack};
