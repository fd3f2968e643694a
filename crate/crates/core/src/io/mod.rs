//! Configuration, CSV and SVG output, and the path comparison metric.

mod config;
mod csv;
mod frechet;
mod svg;

pub use config::{parse_config, read_config, RunConfig, Specimen};
pub use csv::{
    crack_csv_string, format_number, parse_crack_csv, read_crack_csv, write_crack_csv, write_displacement_samples,
    write_pd_snapshot,
};
pub use frechet::{densified_frechet, densify, frechet_distance};
pub use svg::{plot_comparison, render_svg};
