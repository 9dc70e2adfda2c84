//! Volume lookup: `.rvol` files in a directory plus built-in phantoms.

use std::path::{Path, PathBuf};

use volren_core::volume::{load_volume, make_phantom, PhantomKind, PhantomParams};
use volren_core::ScalarVolume;

use crate::error::ServiceError;
use crate::schema::{VolumeInfo, VolumeList};

pub const PHANTOM_PREFIX: &str = "phantom:";
pub const PHANTOM_SIZE: usize = 64;

#[derive(Clone, Debug, Default)]
pub struct Registry {
    dir: Option<PathBuf>,
}

/// Where a volume id resolves to. Files carry their modification stamp so
/// a rewritten file is not served from a stale cache entry.
#[derive(Clone, Debug, PartialEq)]
pub enum Source {
    Phantom(PhantomKind),
    File { path: PathBuf, stamp: u64 },
}

impl Registry {
    pub fn new(dir: Option<PathBuf>) -> Self {
        Registry { dir }
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn resolve(&self, id: &str) -> Result<Source, ServiceError> {
        if let Some(name) = id.strip_prefix(PHANTOM_PREFIX) {
            return name
                .parse()
                .map(Source::Phantom)
                .map_err(|_| ServiceError::NotFound(id.to_string()));
        }
        let not_found = || ServiceError::NotFound(id.to_string());
        let valid = !id.is_empty()
            && id
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c))
            && !id.starts_with('.');
        if !valid {
            return Err(not_found());
        }
        let dir = self.dir.as_ref().ok_or_else(not_found)?;
        let path = dir.join(format!("{id}.rvol"));
        let meta = std::fs::metadata(&path).map_err(|_| not_found())?;
        if !meta.is_file() {
            return Err(not_found());
        }
        let mtime = meta
            .modified()
            .ok()
            .and_then(|t| t.duration_since(std::time::UNIX_EPOCH).ok())
            .map_or(0, |d| d.as_nanos() as u64);
        Ok(Source::File {
            path,
            stamp: mtime ^ meta.len().rotate_left(32),
        })
    }

    pub fn load(&self, source: &Source) -> Result<ScalarVolume, ServiceError> {
        match source {
            Source::Phantom(kind) => Ok(make_phantom(
                *kind,
                [PHANTOM_SIZE; 3],
                &PhantomParams::default(),
            )?),
            Source::File { path, .. } => load_volume(path)
                .map_err(|e| ServiceError::Internal(format!("cannot load volume: {e}"))),
        }
    }

    /// Phantoms first, then every loadable file in name order. Files that
    /// fail to load are reported in `warnings`.
    pub fn list(&self) -> VolumeList {
        let mut out = VolumeList::default();
        for kind in PhantomKind::ALL {
            let n = PHANTOM_SIZE;
            let v = make_phantom(kind, [n; 3], &PhantomParams::default())
                .expect("phantom dims are valid");
            let (lo, hi) = v.value_range();
            out.volumes.push(VolumeInfo {
                id: format!("{PHANTOM_PREFIX}{kind}"),
                dims: [n; 3],
                spacing: [1.0; 3],
                value_range: [lo, hi],
            });
        }
        let Some(dir) = &self.dir else { return out };
        let entries = match std::fs::read_dir(dir) {
            Ok(e) => e,
            Err(e) => {
                out.warnings.push(format!(
                    "cannot read volume directory {}: {e}",
                    dir.display()
                ));
                return out;
            }
        };
        let mut files: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "rvol") && p.is_file())
            .collect();
        files.sort();
        for path in files {
            let Some(id) = path.file_stem().and_then(|s| s.to_str()) else {
                continue;
            };
            match load_volume(&path) {
                Ok(v) => {
                    let (lo, hi) = v.value_range();
                    out.volumes.push(VolumeInfo {
                        id: id.to_string(),
                        dims: v.dims(),
                        spacing: v.spacing(),
                        value_range: [lo, hi],
                    });
                }
                Err(e) => out
                    .warnings
                    .push(format!("skipped {}: {e}", path.display())),
            }
        }
        out
    }
}
