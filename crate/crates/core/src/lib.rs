pub mod driver;
pub mod globalization;
pub mod linalg;
pub mod mechanism;
pub mod model;
pub mod profile;
pub mod reformulation;
pub mod relaxation;
pub mod subproblem;
