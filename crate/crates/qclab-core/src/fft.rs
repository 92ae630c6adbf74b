//! Process-wide FFT plan cache and 2-D transforms on row-major square arrays.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

type Plan = Arc<dyn Fft<f64>>;

fn plans() -> &'static Mutex<(FftPlanner<f64>, HashMap<(usize, bool), Plan>)> {
    static CACHE: OnceLock<Mutex<(FftPlanner<f64>, HashMap<(usize, bool), Plan>)>> =
        OnceLock::new();
    CACHE.get_or_init(|| Mutex::new((FftPlanner::new(), HashMap::new())))
}

pub(crate) fn plan(n: usize, inverse: bool) -> Plan {
    let mut guard = plans().lock().expect("fft plan cache poisoned");
    let (planner, map) = &mut *guard;
    map.entry((n, inverse))
        .or_insert_with(|| {
            if inverse {
                planner.plan_fft_inverse(n)
            } else {
                planner.plan_fft_forward(n)
            }
        })
        .clone()
}

fn transpose(data: &mut [Complex64], n: usize) {
    for k in 0..n {
        for j in (k + 1)..n {
            data.swap(k * n + j, j * n + k);
        }
    }
}

/// Unnormalized forward (or normalized inverse) 2-D DFT in place.
pub(crate) fn fft2(data: &mut [Complex64], n: usize, inverse: bool) {
    debug_assert_eq!(data.len(), n * n);
    let p = plan(n, inverse);
    let mut scratch = vec![Complex64::new(0.0, 0.0); p.get_inplace_scratch_len()];
    p.process_with_scratch(data, &mut scratch);
    transpose(data, n);
    p.process_with_scratch(data, &mut scratch);
    transpose(data, n);
    if inverse {
        let s = 1.0 / (n * n) as f64;
        for v in data.iter_mut() {
            *v *= s;
        }
    }
}

/// 1-D forward (or normalized inverse) DFT.
pub(crate) fn fft1(data: &mut [Complex64], inverse: bool) {
    let n = data.len();
    let p = plan(n, inverse);
    p.process(data);
    if inverse {
        let s = 1.0 / n as f64;
        for v in data.iter_mut() {
            *v *= s;
        }
    }
}

/// Signed integer frequency of DFT index `i` on a length-`n` transform.
pub(crate) fn signed_index(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}
