pub mod assemble;
pub mod convert;
pub mod mock_render;
pub mod paginate;
pub mod partition;
pub mod render;
pub mod signals;
pub mod stats;
pub mod validate;
