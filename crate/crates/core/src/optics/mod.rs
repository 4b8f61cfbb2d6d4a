//! Contact map to tactile image: gel smoothing, slope estimation,
//! lookup-table shading and the marker field.

mod filter;
mod lookup;
mod markers;
mod reference;

pub use filter::{gradients, smooth_heightmap, GradientField};
pub use lookup::{calibrate_lookup, render_tactile, sphere_press_maps, LookupSettings, LookupTable};
pub use markers::{compose_frame, displace_markers, MarkerField, TactileFrame, FALLOFF_PIXELS};
pub use reference::{default_background, Light, PhongReference};
