pub mod geometry;
pub mod keyval;
pub mod par;
pub mod skeleton;
pub mod kinematics;
pub mod pose;
pub mod labels;
pub mod reba;
pub mod features;
pub mod metrics;
pub mod tcn;
