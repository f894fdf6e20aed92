//! Synthetic PPG/ECG generator with planted ground truth.
//!
//! Each subject is a sequence of cycles of a closed-form harmonic template,
//! placed between log-normally jittered R-peaks and optionally deformed with
//! the IBI. Ground-truth markers come from dense brute-force scans of the
//! closed form and share no code with the analysis pipeline.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cohort;
pub mod error;
pub mod oracle;
pub mod subject;
pub mod template;

pub use cohort::{
    generate_cohort, sub_seed, subject_id, CohortSpec, CohortTruth, IbiGroupTag, PlantedSubject,
    BREATH_HOLD,
};
pub use error::{Result, SynthError};
pub use oracle::{scan_markers, TrueMarkers, DENSE_POINTS};
pub use subject::{
    cycle_waveform, draw_rpeaks, generate_subject, ibi_bin_medians, template_markers, BinMarkers,
    BinTruth, GroundTruth, SubjectData, SubjectSpec, Warp,
};
pub use template::{Profile, Template};
