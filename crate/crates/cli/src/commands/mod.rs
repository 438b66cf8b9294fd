mod certify;
mod couple;
mod sample;
mod spectral;

pub use certify::run as certify;
pub use couple::run as couple;
pub use sample::{run_bias as bias, run_sample as sample};
pub use spectral::run as spectral;
