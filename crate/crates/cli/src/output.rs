use std::io::Write;
use std::path::{Path, PathBuf};

use langevin_kit::integrators::SchemeId;

use crate::error::CliError;

/// Writes `bytes` to `out`, or to stdout without a path.
pub fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, bytes).map_err(|e| CliError::Io(p.to_path_buf(), e)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(bytes)
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Io(PathBuf::from("<stdout>"), e))
        }
    }
}

/// `dir/stem-TAG.ext` for multi-scheme runs.
pub fn per_scheme_path(out: &Path, scheme: SchemeId) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match out.extension() {
        Some(ext) => format!("{stem}-{}.{}", scheme.tag(), ext.to_string_lossy()),
        None => format!("{stem}-{}", scheme.tag()),
    };
    out.with_file_name(name)
}

/// Destination for each scheme's file; several schemes need `--out`.
pub fn scheme_outputs(out: Option<&Path>, schemes: &[SchemeId]) -> Result<Vec<Option<PathBuf>>, CliError> {
    match (out, schemes.len()) {
        (out, 1) => Ok(vec![out.map(Path::to_path_buf)]),
        (Some(p), _) => Ok(schemes.iter().map(|&s| Some(per_scheme_path(p, s))).collect()),
        (None, _) => Err(CliError::Usage("several schemes write one file each; pass --out".into())),
    }
}

/// Full round-trip formatting for CSV numbers.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}
