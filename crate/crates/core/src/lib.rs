pub mod imageio;
pub mod lab;
pub mod math;
pub mod mis;
pub mod pathspace;
pub mod renderer;
pub mod rng;
pub mod scene;
pub mod stats;
