//! Scratch probe for the limit-map ray ladder: adaptive strand march across
//! the ray parameter, recording the deep endpoint winding and the closest
//! approach of any chain level to the center of the preimage-free disk.
//! Prints, per ladder depth, the crossing-free windows at several disk radii
//! together with the winding each window carries.

use num_complex::Complex64;
use wildtorus::core_maps::limit_preimages;
use wildtorus::geom::winding_turns;

struct Sample {
    s: f64,
    end: Complex64,
    /// min over levels 0..n-1 of |w_k - 1| (levels that still need a preimage)
    clearance: f64,
}

fn chain(s: f64, n: usize, guide: &[Complex64]) -> (Vec<Complex64>, f64) {
    let mut z = Complex64::new(-s, 0.0);
    let mut pts = Vec::with_capacity(n + 1);
    let mut clear = f64::INFINITY;
    pts.push(z);
    for k in 0..n {
        clear = clear.min((z - Complex64::new(1.0, 0.0)).norm());
        let pre = limit_preimages(z);
        let g = guide[k + 1];
        z = if (pre[0] - g).norm() <= (pre[1] - g).norm() { pre[0] } else { pre[1] };
        pts.push(z);
    }
    (pts, clear)
}

fn main() {
    let src = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_3);
    let npts = 40_000usize;
    let (a, b) = ((1e-9f64).ln(), (100.0f64).ln());
    let grid: Vec<f64> = (0..npts)
        .map(|i| (a + (b - a) * i as f64 / (npts - 1) as f64).exp())
        .collect();

    for n in [38usize, 44, 50, 56, 60] {
        let t0 = std::time::Instant::now();
        // seed strand at the smallest s with the pure max-im branch
        let mut seed = vec![Complex64::new(-grid[0], 0.0)];
        for _ in 0..n {
            let pre = limit_preimages(seed[seed.len() - 1]);
            seed.push(if pre[0].im >= pre[1].im { pre[0] } else { pre[1] });
        }
        let (mut prev_chain, c0) = chain(grid[0], n, &seed);
        let mut samples = vec![Sample {
            s: grid[0],
            end: prev_chain[n],
            clearance: c0,
        }];
        let mut targets: Vec<f64> = grid.iter().rev().copied().collect();
        let mut inserted = 0usize;
        while let Some(s) = targets.pop() {
            let (ch, clear) = chain(s, n, &prev_chain);
            let prev = samples.last().unwrap();
            let step = (ch[n] - prev.end).norm();
            let rad = (prev.end - src).norm().min((ch[n] - src).norm());
            let lgap = s.ln() - prev.s.ln();
            if (step > 0.25 * rad || step > 0.05) && lgap > 1e-12 && inserted < 3_000_000 {
                inserted += 1;
                targets.push(s);
                targets.push(((s.ln() + prev.s.ln()) / 2.0).exp());
                continue;
            }
            samples.push(Sample { s, end: ch[n], clearance: clear });
            prev_chain = ch;
        }
        let ends: Vec<Complex64> = samples.iter().map(|x| x.end).collect();
        let total = winding_turns(&ends, src).abs();
        println!(
            "\n== depth {n}: {} samples ({inserted} refined), total winding {total:.3} [{:.1}s] ==",
            samples.len(),
            t0.elapsed().as_secs_f64()
        );
        let rmin = ends.iter().map(|z| (z - src).norm()).fold(f64::INFINITY, f64::min);
        let rmax = ends.iter().map(|z| (z - src).norm()).fold(0.0f64, f64::max);
        println!("endpoint radius range [{rmin:.3e}, {rmax:.3e}]");

        for th in [0.055f64, 0.022, 0.0055, 0.0022] {
            // maximal runs with clearance >= th
            let mut windows: Vec<(usize, usize)> = Vec::new();
            let mut start: Option<usize> = None;
            for (i, smp) in samples.iter().enumerate() {
                if smp.clearance >= th {
                    if start.is_none() {
                        start = Some(i);
                    }
                } else if let Some(st) = start.take() {
                    if i - st >= 3 {
                        windows.push((st, i - 1));
                    }
                }
            }
            if let Some(st) = start {
                windows.push((st, samples.len() - 1));
            }
            let mut scored: Vec<(f64, usize, usize)> = windows
                .iter()
                .map(|&(i, j)| (winding_turns(&ends[i..=j], src).abs(), i, j))
                .collect();
            scored.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap());
            print!("th {th:.4}: {} windows; top:", scored.len());
            for (w, i, j) in scored.iter().take(4) {
                print!("  [s {:.3e}..{:.3e} w {w:.2}]", samples[*i].s, samples[*j].s);
            }
            println!();
        }
    }
}
