//! A WKB snapshot is `<stem>_phase.fld` (real), `<stem>_amp.fld` (complex)
//! and `<stem>.json` holding `{"eps": ...}`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::WKBState;
use crate::error::{Error, Result};
use crate::grid::fld;

#[derive(Serialize, Deserialize)]
struct Sidecar {
    eps: f64,
}

fn paths(dir: &Path, stem: &str) -> (PathBuf, PathBuf, PathBuf) {
    (
        dir.join(format!("{stem}_phase.fld")),
        dir.join(format!("{stem}_amp.fld")),
        dir.join(format!("{stem}.json")),
    )
}

pub fn write_snapshot(dir: impl AsRef<Path>, stem: &str, state: &WKBState) -> Result<()> {
    let (phase, amp, json) = paths(dir.as_ref(), stem);
    fld::write_real(&phase, state.phi())?;
    fld::write_complex(&amp, state.amp())?;
    let line = serde_json::to_string(&Sidecar { eps: state.eps() }).expect("sidecar serializes");
    fs::write(&json, line + "\n").map_err(|e| Error::io(&json, e))
}

pub fn read_snapshot(dir: impl AsRef<Path>, stem: &str) -> Result<WKBState> {
    let (phase, amp, json) = paths(dir.as_ref(), stem);
    let text = fs::read_to_string(&json).map_err(|e| Error::io(&json, e))?;
    let sidecar: Sidecar = serde_json::from_str(&text).map_err(|e| Error::Format {
        path: json.clone(),
        reason: e.to_string(),
    })?;
    let phi = fld::read(&phase)?.into_real().ok_or_else(|| Error::Format {
        path: phase.clone(),
        reason: "expected a real field".into(),
    })?;
    let a = fld::read(&amp)?.into_complex().ok_or_else(|| Error::Format {
        path: amp.clone(),
        reason: "expected a complex field".into(),
    })?;
    WKBState::new(phi, a, sidecar.eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use num_complex::Complex64;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid::new(&[8, 16], &[2.0, 3.0], &[-1.0, 0.0]).unwrap();
        let s = WKBState::from_fns(g, 0.05, |x| x[0] * x[1], |x| Complex64::new(x[0], -x[1])).unwrap();
        write_snapshot(dir.path(), "final", &s).unwrap();
        let back = read_snapshot(dir.path(), "final").unwrap();
        assert_eq!(back.eps(), 0.05);
        assert_eq!(back.phi().values(), s.phi().values());
        assert_eq!(back.amp().values(), s.amp().values());
        let text = fs::read_to_string(dir.path().join("final.json")).unwrap();
        assert_eq!(text.lines().count(), 1);
    }

    #[test]
    fn swapped_files_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid::line(8, 1.0, 0.0).unwrap();
        let s = WKBState::from_fns(g, 0.5, |_| 0.0, |_| Complex64::new(1.0, 0.0)).unwrap();
        write_snapshot(dir.path(), "s", &s).unwrap();
        fs::copy(dir.path().join("s_amp.fld"), dir.path().join("s_phase.fld")).unwrap();
        assert!(matches!(read_snapshot(dir.path(), "s"), Err(Error::Format { .. })));
    }
}
