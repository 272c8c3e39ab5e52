//! C ABI for the owi-sim simulator.
//!
//! Every entry point returns an [`OwiStatus`]. On failure the message is kept
//! per thread and can be read with [`owi_last_error_message`]. Objects cross
//! the boundary as opaque handles that the caller releases with the matching
//! `*_free` function. Panics are caught and reported as `OWI_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use owi_sim::cli::config::parse_config;
use owi_sim::cli::presets::PRESET_NAMES;
use owi_sim::params::linear_grid;
use owi_sim::rates::{collisional_transfer_rates, mean_relative_speed, reduced_mass, wall_relaxation, BufferGasSpec, CellSpec};
use owi_sim::{
    evolve, spectrum_with_jobs, steady_state, DensityMatrix, Error, EvolveControls, GeneratorMode, Liouvillian,
    SpectrumParams, SpectrumResult, SystemParams,
};

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OwiStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    UnknownField = 3,
    InvalidParam = 4,
    Config = 5,
    /// The integrator could not reach the end time.
    IntegrationFailed = 6,
    /// The steady-state system is singular or badly conditioned.
    Degenerate = 7,
    /// The request is not defined for the chosen generator mode.
    Unsupported = 8,
    SpectrumFailed = 9,
    IndexOutOfRange = 10,
    Panic = 11,
}

/// Generator used for time evolution.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OwiMode {
    TraceConserving = 0,
    Literal = 1,
}

/// Opaque model parameters.
pub struct OwiSystem(SystemParams);

/// Opaque computed spectrum.
pub struct OwiSpectrum(SpectrumResult);

/// Cell geometry in SI units.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct OwiCell {
    pub length: f64,
    pub width: f64,
    pub thickness: f64,
    pub temperature: f64,
    pub atom_mass: f64,
}

/// Buffer gas in SI units.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct OwiBuffer {
    pub number_density: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub molecule_mass: f64,
}

/// Rates and speeds in rad/s and m/s.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct OwiRates {
    pub w12: f64,
    pub r34: f64,
    pub r43: f64,
    pub v_bar: f64,
    pub v_av: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
}

struct Failure(OwiStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::InvalidParam { .. } | Error::InvalidState(_) => OwiStatus::InvalidParam,
            Error::StepUnderflow { .. } | Error::StepLimit { .. } => OwiStatus::IntegrationFailed,
            Error::Degenerate { .. } => OwiStatus::Degenerate,
            Error::LiteralSteadyState => OwiStatus::Unsupported,
            Error::Spectrum(_) => OwiStatus::SpectrumFailed,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(OwiStatus::NullPointer, format!("`{what}` is null"))
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> OwiStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_last_error("");
            OwiStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_last_error(&message);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            OwiStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure(OwiStatus::InvalidUtf8, format!("`{what}` is not valid UTF-8")))
}

fn field<'a>(params: &'a mut SystemParams, name: &str) -> Result<&'a mut f64, Failure> {
    Ok(match name {
        "omega_pr" => &mut params.omega_pr,
        "omega_pu" => &mut params.omega_pu,
        "delta_pr" => &mut params.delta_pr,
        "delta_pu" => &mut params.delta_pu,
        "delta_hfs" => &mut params.delta_hfs,
        "gamma3" => &mut params.gamma3,
        "gamma4" => &mut params.gamma4,
        "w12" => &mut params.w12,
        "r34" => &mut params.r34,
        "r43" => &mut params.r43,
        "lambda_pr" => &mut params.lambda_pr,
        "lambda_pu" => &mut params.lambda_pu,
        "u" => &mut params.u,
        "gamma_laser" => &mut params.gamma_laser,
        other => return Err(Failure(OwiStatus::UnknownField, format!("unknown field `{other}`"))),
    })
}

unsafe fn write_matrix(rho: &DensityMatrix, re: *mut f64, im: *mut f64) -> Result<(), Failure> {
    if re.is_null() {
        return Err(null("re"));
    }
    if im.is_null() {
        return Err(null("im"));
    }
    for i in 0..4 {
        for j in 0..4 {
            *re.add(4 * i + j) = rho[(i, j)].re;
            *im.add(4 * i + j) = rho[(i, j)].im;
        }
    }
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn owi_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or "" after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn owi_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Parses a config document (the same text the command-line tool reads) and
/// returns its model parameters.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn owi_system_from_config(text: *const c_char, out: *mut *mut OwiSystem) -> OwiStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = read_str(text, "text")?;
        let config = parse_config(text).map_err(|e| Failure(OwiStatus::Config, e.to_string()))?;
        *out = Box::into_raw(Box::new(OwiSystem(config.system)));
        Ok(())
    })
}

/// Parameters of a named scenario such as "fig2" or "rb85_cell".
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn owi_system_from_preset(name: *const c_char, out: *mut *mut OwiSystem) -> OwiStatus {
    let name = match read_str(name, "name") {
        Ok(n) => n,
        Err(Failure(status, message)) => {
            set_last_error(&message);
            return status;
        }
    };
    if !PRESET_NAMES.contains(&name) {
        set_last_error(&format!("unknown preset `{name}`; expected one of {}", PRESET_NAMES.join(", ")));
        return OwiStatus::Config;
    }
    let text = CString::new(format!("scenario = {name}\n")).expect("no interior NUL");
    owi_system_from_config(text.as_ptr(), out)
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `system` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn owi_system_free(system: *mut OwiSystem) {
    if !system.is_null() {
        drop(Box::from_raw(system));
    }
}

/// Sets a parameter by name (SI units, angular frequencies in rad/s).
/// The value is checked when the parameters are next used.
///
/// # Safety
/// `system` must be a live handle and `name` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn owi_system_set(system: *mut OwiSystem, name: *const c_char, value: f64) -> OwiStatus {
    guard(|| {
        let system = system.as_mut().ok_or_else(|| null("system"))?;
        *field(&mut system.0, read_str(name, "name")?)? = value;
        Ok(())
    })
}

/// Reads a parameter by name.
///
/// # Safety
/// `system` must be a live handle, `name` a NUL-terminated string and `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn owi_system_get(system: *const OwiSystem, name: *const c_char, out: *mut f64) -> OwiStatus {
    guard(|| {
        let mut params = system.as_ref().ok_or_else(|| null("system"))?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = *field(&mut params, read_str(name, "name")?)?;
        Ok(())
    })
}

/// Stationary density matrix, written row-major into two arrays of 16.
///
/// # Safety
/// `system` must be a live handle; `re` and `im` must hold 16 doubles each.
#[no_mangle]
pub unsafe extern "C" fn owi_steady_state(system: *const OwiSystem, re: *mut f64, im: *mut f64) -> OwiStatus {
    guard(|| {
        let params = system.as_ref().ok_or_else(|| null("system"))?.0.validate()?;
        let rho = steady_state(&Liouvillian::build(&params, GeneratorMode::TraceConserving))?;
        write_matrix(&rho, re, im)
    })
}

/// Evolves diag(1/2, 1/2, 0, 0) for `t_end` seconds and writes the final
/// density matrix row-major.
///
/// # Safety
/// `system` must be a live handle; `re` and `im` must hold 16 doubles each.
#[no_mangle]
pub unsafe extern "C" fn owi_evolve_final(
    system: *const OwiSystem,
    mode: OwiMode,
    t_end: f64,
    re: *mut f64,
    im: *mut f64,
) -> OwiStatus {
    guard(|| {
        let params = system.as_ref().ok_or_else(|| null("system"))?.0.validate()?;
        let mode = match mode {
            OwiMode::TraceConserving => GeneratorMode::TraceConserving,
            OwiMode::Literal => GeneratorMode::PaperLiteral,
        };
        let controls = EvolveControls { sample_interval: Some(t_end.max(0.0)), ..EvolveControls::default() };
        let trajectory =
            evolve(&DensityMatrix::thermal_ground(), &Liouvillian::build(&params, mode), params.gamma3, t_end, &controls)?;
        write_matrix(trajectory.final_state(), re, im)
    })
}

/// Wall relaxation and buffer-gas transfer rates for a cell.
///
/// # Safety
/// `cell`, `buffer` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn owi_rates(cell: *const OwiCell, buffer: *const OwiBuffer, out: *mut OwiRates) -> OwiStatus {
    guard(|| {
        let c = *cell.as_ref().ok_or_else(|| null("cell"))?;
        let b = *buffer.as_ref().ok_or_else(|| null("buffer"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let cell = CellSpec {
            length: c.length,
            width: c.width,
            thickness: c.thickness,
            temperature: c.temperature,
            atom_mass: c.atom_mass,
        }
        .validate()?;
        let gas = BufferGasSpec {
            number_density: b.number_density,
            sigma1: b.sigma1,
            sigma2: b.sigma2,
            molecule_mass: b.molecule_mass,
        }
        .validate()?;
        let (r34, r43) = collisional_transfer_rates(&gas, cell.temperature, cell.atom_mass);
        *out = OwiRates {
            w12: wall_relaxation(&cell),
            r34,
            r43,
            v_bar: owi_sim::rates::mean_thermal_speed(cell.temperature, cell.atom_mass),
            v_av: mean_relative_speed(cell.temperature, reduced_mass(cell.atom_mass, gas.molecule_mass)),
        };
        Ok(())
    })
}

/// Doppler-averaged spectrum on `points` detunings evenly spaced from
/// `start` to `end` (rad/s). `jobs` = 0 uses every core.
///
/// # Safety
/// `system` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn owi_spectrum_compute(
    system: *const OwiSystem,
    number_density: f64,
    path_length: f64,
    start: f64,
    end: f64,
    points: usize,
    jobs: usize,
    out: *mut *mut OwiSpectrum,
) -> OwiStatus {
    guard(|| {
        let params = system.as_ref().ok_or_else(|| null("system"))?.0.validate()?;
        if out.is_null() {
            return Err(null("out"));
        }
        let sp = SpectrumParams::new(number_density, path_length, linear_grid(start, end, points)).validate()?;
        let result = spectrum_with_jobs(&params, &sp, (jobs > 0).then_some(jobs))?;
        *out = Box::into_raw(Box::new(OwiSpectrum(result)));
        Ok(())
    })
}

/// Number of grid points in a spectrum; 0 for null.
///
/// # Safety
/// `spectrum` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn owi_spectrum_len(spectrum: *const OwiSpectrum) -> usize {
    spectrum.as_ref().map_or(0, |s| s.0.detunings.len())
}

/// Detuning (rad/s), gain and transmission at grid index `index`.
///
/// # Safety
/// `spectrum` must be a live handle and the outputs writable.
#[no_mangle]
pub unsafe extern "C" fn owi_spectrum_get(
    spectrum: *const OwiSpectrum,
    index: usize,
    detuning: *mut f64,
    gain: *mut f64,
    transmission: *mut f64,
) -> OwiStatus {
    guard(|| {
        let s = &spectrum.as_ref().ok_or_else(|| null("spectrum"))?.0;
        if detuning.is_null() || gain.is_null() || transmission.is_null() {
            return Err(null("output"));
        }
        if index >= s.detunings.len() {
            return Err(Failure(
                OwiStatus::IndexOutOfRange,
                format!("index {index} out of range for {} points", s.detunings.len()),
            ));
        }
        *detuning = s.detunings[index];
        *gain = s.gain[index];
        *transmission = s.transmission[index];
        Ok(())
    })
}

/// Releases a spectrum. Null is ignored.
///
/// # Safety
/// `spectrum` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn owi_spectrum_free(spectrum: *mut OwiSpectrum) {
    if !spectrum.is_null() {
        drop(Box::from_raw(spectrum));
    }
}
