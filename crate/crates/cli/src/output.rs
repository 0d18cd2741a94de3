//! CSV emitters for trace files. All floats go through the fixed
//! 17-significant-digit format so replays are byte-identical.

use std::io::{self, Write};
use std::path::Path;

use lkbo_core::format::fmt_f64;
use lkbo_core::moments::MomentState;
use lkbo_core::report::PhaseTrace;

/// Optimizer trace: columns `h, m_1..m_d, V, cp_1..cp_d`.
pub fn write_run_trace(path: &Path, trace: &PhaseTrace) -> io::Result<()> {
    let d = trace.states.first().map_or(0, |s| s.m.len());
    let mut out = String::from("h");
    for r in 1..=d {
        out.push_str(&format!(",m_{r}"));
    }
    out.push_str(",V");
    for r in 1..=d {
        out.push_str(&format!(",cp_{r}"));
    }
    out.push('\n');
    for (h, (state, cp)) in trace.states.iter().zip(&trace.consensus).enumerate() {
        out.push_str(&h.to_string());
        for m in &state.m {
            out.push(',');
            out.push_str(&fmt_f64(*m));
        }
        out.push(',');
        out.push_str(&fmt_f64(state.v));
        for c in cp {
            out.push(',');
            out.push_str(&fmt_f64(*c));
        }
        out.push('\n');
    }
    std::fs::File::create(path)?.write_all(out.as_bytes())
}

/// Moment trace: columns `t, m_1..m_d, V`.
pub fn write_moment_trace(path: &Path, states: &[MomentState]) -> io::Result<()> {
    let d = states.first().map_or(0, |s| s.m.len());
    let mut out = String::from("t");
    for r in 1..=d {
        out.push_str(&format!(",m_{r}"));
    }
    out.push_str(",V\n");
    for state in states {
        out.push_str(&fmt_f64(state.t));
        for m in &state.m {
            out.push(',');
            out.push_str(&fmt_f64(*m));
        }
        out.push(',');
        out.push_str(&fmt_f64(state.v));
        out.push('\n');
    }
    std::fs::File::create(path)?.write_all(out.as_bytes())
}
