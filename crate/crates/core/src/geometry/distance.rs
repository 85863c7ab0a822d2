use super::image::Mask;

const INF: f64 = 1e20;

/// 1-D squared distance transform of a sampled function (lower envelope of
/// parabolas).
fn edt_1d(f: &[f64], out: &mut [f64]) {
    let n = f.len();
    let mut v = vec![0usize; n];
    let mut z = vec![0.0f64; n + 1];
    let mut k = 0usize;
    z[0] = -INF;
    z[1] = INF;
    for q in 1..n {
        let parabola = |p: usize| {
            ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64))
        };
        let mut s = parabola(v[k]);
        while s <= z[k] {
            k -= 1;
            s = parabola(v[k]);
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = INF;
    }
    k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let d = q as f64 - p as f64;
        *o = d * d + f[p];
    }
}

/// Euclidean distance from each set pixel to the nearest unset pixel, with
/// everything outside the image counted as unset. Unset pixels map to 0.
/// Returned row-major over the full image.
pub fn distance_transform(m: &Mask) -> Vec<f64> {
    let b = m.bbox();
    // Work on the bbox padded by one background pixel on every side.
    let w = b.width() + 2;
    let h = b.height() + 2;
    let mut grid = vec![0.0f64; w * h];
    for v in 0..h {
        for u in 0..w {
            let inside = u >= 1
                && v >= 1
                && u <= b.width()
                && v <= b.height()
                && m.get(b.u_min + u - 1, b.v_min + v - 1);
            grid[v * w + u] = if inside { INF } else { 0.0 };
        }
    }
    let mut col = vec![0.0; h];
    let mut col_out = vec![0.0; h];
    for u in 0..w {
        for v in 0..h {
            col[v] = grid[v * w + u];
        }
        edt_1d(&col, &mut col_out);
        for v in 0..h {
            grid[v * w + u] = col_out[v];
        }
    }
    let mut row_out = vec![0.0; w];
    for v in 0..h {
        edt_1d(&grid[v * w..(v + 1) * w], &mut row_out);
        grid[v * w..(v + 1) * w].copy_from_slice(&row_out);
    }
    let mut out = vec![0.0; m.width() * m.height()];
    for v in 1..=b.height() {
        for u in 1..=b.width() {
            let (gu, gv) = (b.u_min + u - 1, b.v_min + v - 1);
            if m.get(gu, gv) {
                out[gv * m.width() + gu] = grid[v * w + u].sqrt();
            }
        }
    }
    out
}
