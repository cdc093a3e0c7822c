//! Self-contained log-log convergence plot.

use std::fmt::Write;

use cvop_core::metrics::{fmt_f64, IterationRecord, SlopeFit, TOL_ZERO};

const W: f64 = 720.0;
const H: f64 = 480.0;
const MARGIN: f64 = 60.0;

pub struct Plot<'a> {
    pub log: &'a [IterationRecord],
    pub fit: Option<&'a SlopeFit>,
    /// Reference curve `c k^exponent`.
    pub c: f64,
    pub exponent: f64,
}

impl Plot<'_> {
    /// `(ln k, ln δ)` for records that can be drawn on log axes.
    fn points(&self) -> Vec<(f64, f64)> {
        self.log
            .iter()
            .filter(|r| r.k >= 1 && r.max_dist > TOL_ZERO)
            .map(|r| ((r.k as f64).ln(), r.max_dist.ln()))
            .collect()
    }

    fn reference(&self, lk: f64) -> f64 {
        self.c.ln() + self.exponent * lk
    }

    fn fitted(&self, lk: f64) -> Option<f64> {
        self.fit.map(|f| f.intercept + f.slope * lk)
    }

    pub fn data_csv(&self) -> String {
        let mut s = String::from("k,ln_k,max_dist,ln_max_dist,ln_fit,ln_reference\n");
        for r in self.log.iter().filter(|r| r.k >= 1) {
            let lk = (r.k as f64).ln();
            let ld = if r.max_dist > 0.0 {
                fmt_f64(r.max_dist.ln())
            } else {
                String::new()
            };
            let fit = self.fitted(lk).map(fmt_f64).unwrap_or_default();
            writeln!(
                s,
                "{},{},{},{},{},{}",
                r.k,
                fmt_f64(lk),
                fmt_f64(r.max_dist),
                ld,
                fit,
                fmt_f64(self.reference(lk))
            )
            .unwrap();
        }
        s
    }

    pub fn render(&self) -> String {
        let pts = self.points();
        let (x0, x1) = bounds(pts.iter().map(|p| p.0).chain([0.0]));
        let mut ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
        ys.extend([self.reference(x0), self.reference(x1)]);
        if let (Some(a), Some(b)) = (self.fitted(x0), self.fitted(x1)) {
            ys.extend([a, b]);
        }
        let (y0, y1) = bounds(ys.into_iter());
        let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (W - 2.0 * MARGIN);
        let sy = |y: f64| H - MARGIN - (y - y0) / (y1 - y0) * (H - 2.0 * MARGIN);

        let mut s = String::new();
        writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#).unwrap();
        writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
        writeln!(
            s,
            r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            W - 2.0 * MARGIN,
            H - 2.0 * MARGIN
        )
        .unwrap();
        for i in 0..=5 {
            let t = i as f64 / 5.0;
            let (xv, yv) = (x0 + t * (x1 - x0), y0 + t * (y1 - y0));
            writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{xv:.2}</text>"#,
                sx(xv),
                H - MARGIN + 18.0
            )
            .unwrap();
            writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{yv:.2}</text>"#,
                MARGIN - 6.0,
                sy(yv) + 4.0
            )
            .unwrap();
        }
        writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">log k</text>"#,
            W / 2.0,
            H - 15.0
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="15" y="{:.1}" text-anchor="middle" transform="rotate(-90 15 {:.1})">log δH</text>"#,
            H / 2.0,
            H / 2.0
        )
        .unwrap();
        for (x, y) in &pts {
            writeln!(
                s,
                r##"<circle cx="{:.2}" cy="{:.2}" r="2" fill="#1f77b4"/>"##,
                sx(*x),
                sy(*y)
            )
            .unwrap();
        }
        let mut legend = vec![("#1f77b4", "log δH".to_string())];
        if let (Some(a), Some(b), Some(f)) = (self.fitted(x0), self.fitted(x1), self.fit) {
            line(&mut s, (sx(x0), sy(a)), (sx(x1), sy(b)), "#d62728", "");
            legend.push(("#d62728", format!("regression, slope {:.3}", f.slope)));
        }
        line(
            &mut s,
            (sx(x0), sy(self.reference(x0))),
            (sx(x1), sy(self.reference(x1))),
            "#2ca02c",
            r#" stroke-dasharray="6 4""#,
        );
        legend.push((
            "#2ca02c",
            format!("log ({} k^{:.3})", self.c, self.exponent),
        ));
        for (i, (color, label)) in legend.iter().enumerate() {
            let y = MARGIN + 16.0 + 16.0 * i as f64;
            writeln!(
                s,
                r#"<rect x="{:.1}" y="{:.1}" width="10" height="10" fill="{color}"/>"#,
                W - MARGIN - 200.0,
                y - 9.0
            )
            .unwrap();
            writeln!(
                s,
                r#"<text x="{:.1}" y="{y:.1}">{label}</text>"#,
                W - MARGIN - 185.0
            )
            .unwrap();
        }
        s.push_str("</svg>\n");
        s
    }
}

fn line(s: &mut String, a: (f64, f64), b: (f64, f64), color: &str, extra: &str) {
    writeln!(
        s,
        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="1.5"{extra}/>"#,
        a.0, a.1, b.0, b.1
    )
    .unwrap();
}

/// Padded `[min, max]`, never degenerate.
fn bounds(it: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = it
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(v), b.max(v))
        });
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let pad = ((hi - lo) * 0.05).max(1e-3);
    (lo - pad, hi + pad)
}
