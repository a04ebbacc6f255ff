//! A parameter directory holds one ZTEN file per tensor and a manifest whose
//! lines read `name d0xd1x...`, in insertion order.

use std::fs;
use std::path::Path;

use super::zten::{read_zten, write_zten};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const MANIFEST: &str = "manifest.txt";

fn file_name(name: &str) -> String {
    format!("{}.zten", name.replace(['/', '\\'], "_"))
}

pub fn save_params(dir: impl AsRef<Path>, params: &[(String, Tensor)]) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))?;
    let mut manifest = String::new();
    for (name, t) in params {
        if name.is_empty() || name.contains(char::is_whitespace) {
            return Err(Error::invalid("save_params", format!("bad parameter name {name:?}")));
        }
        write_zten(dir.join(file_name(name)), t)?;
        let dims: Vec<String> = t.shape().iter().map(usize::to_string).collect();
        manifest.push_str(&format!("{name} {}\n", dims.join("x")));
    }
    let m = dir.join(MANIFEST);
    fs::write(&m, manifest).map_err(|e| Error::file(&m, e))?;
    Ok(())
}

pub fn load_params(dir: impl AsRef<Path>) -> Result<Vec<(String, Tensor)>> {
    let dir = dir.as_ref();
    let m = dir.join(MANIFEST);
    let manifest = fs::read_to_string(&m).map_err(|e| Error::file(&m, e))?;
    let mut out = Vec::new();
    for line in manifest.lines().filter(|l| !l.trim().is_empty()) {
        let (name, dims) = line
            .split_once(' ')
            .ok_or_else(|| Error::Format(format!("manifest line {line:?}")))?;
        let shape: Vec<usize> = dims
            .split('x')
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Format(format!("manifest shape {dims:?}")))?;
        let t = read_zten(dir.join(file_name(name)))?;
        if t.shape() != shape.as_slice() {
            return Err(Error::Format(format!(
                "{name}: manifest says {shape:?}, file holds {:?}",
                t.shape()
            )));
        }
        out.push((name.to_string(), t));
    }
    Ok(out)
}
