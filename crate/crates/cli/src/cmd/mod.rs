pub mod af_check;
pub mod cap_table;
pub mod convexify;
pub mod export_mesh;
pub mod minkowski;
pub mod run;
