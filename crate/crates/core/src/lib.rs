pub mod farey;
pub mod poly;
pub mod tracetree;
pub mod representations;
pub mod bowditch;
pub mod pleating;
pub mod expr;
pub mod raster;
