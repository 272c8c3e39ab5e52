//! Named scenarios. Each preset is itself a config document, so expanding one
//! goes through exactly the same parser and unit checks as user input.

use crate::rates::{most_probable_speed, MASS_RB85};

pub const PRESET_NAMES: [&str; 5] = ["fig2", "fig3", "fig4_walls", "fig4_nowalls", "rb85_cell"];

/// Temperature used for the Doppler width of the simulated figures.
pub const FIGURE_TEMPERATURE: f64 = 473.0;

fn caption_system(w12_in_gamma3: f64) -> String {
    let u = most_probable_speed(FIGURE_TEMPERATURE, MASS_RB85);
    format!(
        "[system]
gamma3 = 5.75 MHz_x2pi
gamma4 = 1 gamma3
omega_pr = 0.05 gamma3
omega_pu = 60 gamma3
w12 = {w12_in_gamma3} gamma3
r34 = 2 gamma3
r43 = 2 gamma3
u = {u:e} m/s
"
    )
}

const EVOLVE: &str = "[evolve]
t_end = 20 us
samples = 2000
";

const SPECTRUM_150C: &str = "[spectrum]
number_density = 3.5e19 m^-3
path_length = 30 um
detuning_start = -2 GHz_x2pi
detuning_end = 2 GHz_x2pi
points = 201
quadrature_nodes = 64
";

/// Config text of a preset, or `None` for an unknown name.
pub fn preset_text(name: &str) -> Option<String> {
    let text = match name {
        "fig2" => format!("{}{EVOLVE}", caption_system(0.5)),
        "fig3" => format!("{}{EVOLVE}", caption_system(0.0)),
        "fig4_walls" => format!("{}{EVOLVE}{SPECTRUM_150C}", caption_system(0.5)),
        "fig4_nowalls" => format!("{}{EVOLVE}{SPECTRUM_150C}", caption_system(0.0)),
        "rb85_cell" => format!(
            "[system]
gamma3 = 5.75 MHz_x2pi
gamma4 = 1 gamma3
omega_pr = 0.05 gamma3
omega_pu = 60 gamma3

[cell]
length = 2 mm
width = 2 mm
thickness = 30 um
temperature = 250 C
atom_mass = {MASS_RB85:e} kg

[buffer]
table = h2_330k
pressure = 8 Torr

{EVOLVE}
[spectrum]
number_density = 3.05e20 m^-3
path_length = 30 um
detuning_start = -2 GHz_x2pi
detuning_end = 2 GHz_x2pi
points = 201
quadrature_nodes = 64
"
        ),
        _ => return None,
    };
    Some(text)
}
