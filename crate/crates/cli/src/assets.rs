//! Input files shipped with the binary. `--assets DIR` reads them from disk instead.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, Result};

const EMBEDDED: &[(&str, &str)] = &[
    ("example.spec", include_str!("../assets/example.spec")),
    ("inverse.spec", include_str!("../assets/inverse.spec")),
    ("reducible.spec", include_str!("../assets/reducible.spec")),
    ("hnn-limit.tree", include_str!("../assets/hnn-limit.tree")),
    ("counterexample-2.tree", include_str!("../assets/counterexample-2.tree")),
    ("limit-2.tree", include_str!("../assets/limit-2.tree")),
];

pub struct Assets {
    dir: Option<PathBuf>,
}

impl Assets {
    pub fn new(dir: Option<&Path>) -> Self {
        Assets { dir: dir.map(Path::to_path_buf) }
    }

    pub fn read(&self, name: &str) -> Result<String> {
        match &self.dir {
            Some(dir) => {
                let path = dir.join(name);
                std::fs::read_to_string(&path).map_err(|e| anyhow!("missing asset file {}: {e}", path.display()))
            }
            None => EMBEDDED
                .iter()
                .find(|(n, _)| *n == name)
                .map(|(_, t)| t.to_string())
                .ok_or_else(|| anyhow!("missing asset file {name}")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedded_assets_parse() {
        let a = Assets::new(None);
        for (name, _) in EMBEDDED {
            let text = a.read(name).unwrap();
            if name.ends_with(".spec") {
                crate::specfile::parse(&text).unwrap();
            } else {
                reltrack::reltrees::GrushkoTreePoint::parse(&text).unwrap();
            }
        }
    }

    #[test]
    fn missing_directory_is_reported() {
        let err = Assets::new(Some(Path::new("/nonexistent-assets"))).read("example.spec").unwrap_err();
        assert!(err.to_string().contains("missing asset file"));
    }
}
