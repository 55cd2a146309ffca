//! CSV writers for simulated paths and diagnostics. Every writer emits a
//! header row; quoting follows RFC 4180.

use std::io::Write;

use crate::error::Result;
use crate::garch::GarchPath;
use crate::goldie::WsEstimate;
use crate::spectral::{AngularSample, SpectralProcessDraw};
use crate::sre_engine::PathSample;

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(out)
}

/// `t,w1,w2`.
pub fn write_path<W: Write>(out: W, path: &PathSample) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["t", "w1", "w2"])?;
    for (t, (a, b)) in path.w1.iter().zip(&path.w2).enumerate() {
        w.serialize((t, a, b))?;
    }
    w.flush()?;
    Ok(())
}

/// `x,value` pairs such as a tail-ratio diagnostic.
pub fn write_diagnostic<W: Write>(out: W, points: &[(f64, f64)]) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["x", "value"])?;
    for p in points {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

/// `theta1,...,thetaD,weight`.
pub fn write_angular<W: Write>(out: W, sample: &AngularSample) -> Result<()> {
    let mut w = writer(out);
    let mut header: Vec<String> = (1..=sample.dim).map(|j| format!("theta{j}")).collect();
    header.push("weight".into());
    w.write_record(&header)?;
    let mut row = Vec::with_capacity(sample.dim + 1);
    for i in 0..sample.len() {
        row.clear();
        row.extend_from_slice(sample.point(i));
        row.push(sample.weights[i]);
        w.serialize(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// `draw_id,t,y1,y2`, with `t = 0` the starting point `Y Theta_0`.
pub fn write_spectral_draws<W: Write>(out: W, draws: &[SpectralProcessDraw]) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["draw_id", "t", "y1", "y2"])?;
    for (id, d) in draws.iter().enumerate() {
        w.serialize((id, 0, d.y0_norm * d.theta0[0], d.y0_norm * d.theta0[1]))?;
        for (t, p) in d.limit().iter().enumerate() {
            w.serialize((id, t + 1, p[0], p[1]))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `s,w_s,se`.
pub fn write_ws_trace<W: Write>(out: W, trace: &[WsEstimate]) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["s", "w_s", "se"])?;
    for e in trace {
        w.serialize((e.s, e.w_s, e.std_error))?;
    }
    w.flush()?;
    Ok(())
}

/// `t,x1,x2,sigma1_sq,sigma2_sq`.
pub fn write_garch_path<W: Write>(out: W, path: &GarchPath) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["t", "x1", "x2", "sigma1_sq", "sigma2_sq"])?;
    for (t, (x, s)) in path.x.iter().zip(&path.sigma2).enumerate() {
        w.serialize((t, x[0], x[1], s[0], s[1]))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sre_engine::{SampleMode, SimConfig};

    fn text(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> String {
        let mut buf = Vec::new();
        f(&mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn path_round_trip() {
        let p = PathSample {
            w1: vec![1.5, 0.1],
            w2: vec![2.0, 1e-300],
            mode: SampleMode::ForwardBurnin,
            config: SimConfig {
                burn_in: 1,
                n_draws: 2,
                thinning: 1,
                truncation_depth: 1,
                base_seed: 0,
            },
        };
        let s = text(|b| write_path(b, &p));
        assert_eq!(s, "t,w1,w2\r\n0,1.5,2.0\r\n1,0.1,1e-300\r\n");
        let mut r = csv::Reader::from_reader(s.as_bytes());
        let rows: Vec<(usize, f64, f64)> = r.deserialize().map(|x| x.unwrap()).collect();
        assert_eq!(rows[1], (1, 0.1, 1e-300));
    }

    #[test]
    fn angular_and_spectral_layouts() {
        let a = AngularSample {
            dim: 2,
            points: vec![0.6, 0.8],
            weights: vec![1.0],
            threshold_u: None,
            n_exceedances: 1,
        };
        assert_eq!(text(|b| write_angular(b, &a)), "theta1,theta2,weight\r\n0.6,0.8,1.0\r\n");
        let d = SpectralProcessDraw {
            y0_norm: 2.0,
            theta0: [0.6, 0.8],
            path: vec![[0.5, 0.25]],
        };
        assert_eq!(
            text(|b| write_spectral_draws(b, &[d])),
            "draw_id,t,y1,y2\r\n0,0,1.2,1.6\r\n0,1,1.0,0.5\r\n"
        );
    }

    #[test]
    fn trace_and_garch_layouts() {
        let t = [WsEstimate { s: 4, w_s: 1.25, std_error: 0.5 }];
        assert_eq!(text(|b| write_ws_trace(b, &t)), "s,w_s,se\r\n4,1.25,0.5\r\n");
        let g = GarchPath {
            x: vec![[1.0, -2.0]],
            sigma2: vec![[1.0, 4.0]],
            z: vec![[1.0, -1.0]],
        };
        assert_eq!(text(|b| write_garch_path(b, &g)), "t,x1,x2,sigma1_sq,sigma2_sq\r\n0,1.0,-2.0,1.0,4.0\r\n");
        assert_eq!(text(|b| write_diagnostic(b, &[(2.0, 0.5)])), "x,value\r\n2.0,0.5\r\n");
    }
}
