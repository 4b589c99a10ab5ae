// SPDX-License-Identifier: MIT OR Apache-2.0

//! Peak heap use of the QR kernels against the analytic working-storage
//! estimates. Lives in its own binary so the counting allocator sees only
//! this test.

use std::alloc::{GlobalAlloc, Layout, System};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use vibsysid::footprint::estimate_qr_footprint;
use vibsysid::qr::factorize;
use vibsysid::{ExecContext, Matrix, QrMethod, Real};

struct Counting;

static CURRENT: AtomicUsize = AtomicUsize::new(0);
static PEAK: AtomicUsize = AtomicUsize::new(0);
static SERIAL: Mutex<()> = Mutex::new(());

unsafe impl GlobalAlloc for Counting {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        let p = System.alloc(layout);
        if !p.is_null() {
            let now = CURRENT.fetch_add(layout.size(), Ordering::SeqCst) + layout.size();
            PEAK.fetch_max(now, Ordering::SeqCst);
        }
        p
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        CURRENT.fetch_sub(layout.size(), Ordering::SeqCst);
        System.dealloc(ptr, layout)
    }
}

#[global_allocator]
static ALLOC: Counting = Counting;

/// Bytes allocated at the high-water mark of `f`, beyond what was live before.
fn peak_during<R>(f: impl FnOnce() -> R) -> (R, usize) {
    let base = CURRENT.load(Ordering::SeqCst);
    PEAK.store(base, Ordering::SeqCst);
    let r = f();
    (r, PEAK.load(Ordering::SeqCst) - base)
}

fn measure<T: Real>(method: QrMethod, n: usize, np: usize) -> (usize, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(n as u64 * 31 + np as u64);
    let a = Matrix::<T>::from_fn(n, np, |_, _| T::of(StandardNormal.sample(&mut rng)));
    let ctx = ExecContext::sequential();
    let (f, peak) = peak_during(|| factorize(&a, method, &ctx).unwrap());
    drop(f);
    let words = estimate_qr_footprint(method, n, np, 4)
        .unwrap()
        .working_words;
    (peak, words)
}

#[test]
fn kernels_fit_their_working_storage_estimate() {
    let _guard = SERIAL.lock().unwrap();
    for (n, np) in [(200, 8), (480, 16), (2520, 56)] {
        for method in QrMethod::ALL {
            let (peak, words) = measure::<f32>(method, n, np);
            let limit = words as f64 * 4.0 * 1.25;
            assert!(
                peak as f64 <= limit,
                "{method} {n}x{np} f32: {peak} B > {limit} B"
            );
            let (peak, words) = measure::<f64>(method, n, np);
            let limit = words as f64 * 8.0 * 1.25;
            assert!(
                peak as f64 <= limit,
                "{method} {n}x{np} f64: {peak} B > {limit} B"
            );
        }
    }
}

#[test]
fn householder_stays_under_table_formula() {
    let _guard = SERIAL.lock().unwrap();
    let (peak, words) = measure::<f32>(QrMethod::Householder, 480, 16);
    // Np + N + 5 N Np + N² elements.
    assert_eq!(words, 16 + 480 + 5 * 480 * 16 + 480 * 480);
    assert!(peak as u64 <= words * 4, "{peak}");
}
