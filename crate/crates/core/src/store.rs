//! File providers backing an owner.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, Read, Seek, SeekFrom};
use std::path::{Component, Path, PathBuf};

use bytes::Bytes;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FileInfo {
    pub size: u64,
    pub crc32: u32,
}

pub trait FileStore {
    fn info(&self, name: &str) -> Option<FileInfo>;

    /// Reads `len` bytes at `offset`. `None` if the file vanished or is short.
    fn read(&self, name: &str, offset: u64, len: usize) -> Option<Bytes>;
}

impl<S: FileStore + ?Sized> FileStore for &S {
    fn info(&self, name: &str) -> Option<FileInfo> {
        (**self).info(name)
    }

    fn read(&self, name: &str, offset: u64, len: usize) -> Option<Bytes> {
        (**self).read(name, offset, len)
    }
}

impl<S: FileStore + ?Sized> FileStore for std::sync::Arc<S> {
    fn info(&self, name: &str) -> Option<FileInfo> {
        (**self).info(name)
    }

    fn read(&self, name: &str, offset: u64, len: usize) -> Option<Bytes> {
        (**self).read(name, offset, len)
    }
}

/// In-memory store. Reads are zero-copy slices of the stored buffer.
#[derive(Debug, Default, Clone)]
pub struct MemoryStore {
    files: HashMap<String, (Bytes, u32)>,
}

impl MemoryStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, data: impl Into<Bytes>) {
        let data = data.into();
        let crc = crc32fast::hash(&data);
        self.files.insert(name.into(), (data, crc));
    }

    pub fn with_file(mut self, name: impl Into<String>, data: impl Into<Bytes>) -> Self {
        self.insert(name, data);
        self
    }
}

impl FileStore for MemoryStore {
    fn info(&self, name: &str) -> Option<FileInfo> {
        self.files.get(name).map(|(data, crc)| FileInfo {
            size: data.len() as u64,
            crc32: *crc,
        })
    }

    fn read(&self, name: &str, offset: u64, len: usize) -> Option<Bytes> {
        let (data, _) = self.files.get(name)?;
        let start = usize::try_from(offset).ok()?;
        let end = start.checked_add(len)?;
        (end <= data.len()).then(|| data.slice(start..end))
    }
}

/// Serves regular files below a root directory. Names that would escape the
/// root (`..`, absolute paths, symlinks pointing outside) resolve to nothing.
#[derive(Debug, Clone)]
pub struct DirStore {
    root: PathBuf,
}

impl DirStore {
    pub fn new(root: impl AsRef<Path>) -> io::Result<Self> {
        let root = root.as_ref().canonicalize()?;
        if !root.is_dir() {
            return Err(io::Error::new(
                io::ErrorKind::InvalidInput,
                format!("{} is not a directory", root.display()),
            ));
        }
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Maps a request name to a path inside the root, if it is one.
    pub fn resolve(&self, name: &str) -> Option<PathBuf> {
        let rel = Path::new(name);
        if name.is_empty() || !rel.components().all(|c| matches!(c, Component::Normal(_))) {
            return None;
        }
        let path = self.root.join(rel).canonicalize().ok()?;
        (path.starts_with(&self.root) && path.is_file()).then_some(path)
    }
}

impl FileStore for DirStore {
    fn info(&self, name: &str) -> Option<FileInfo> {
        let mut file = File::open(self.resolve(name)?).ok()?;
        let mut hasher = crc32fast::Hasher::new();
        let mut buf = vec![0u8; 64 * 1024];
        let mut size = 0u64;
        loop {
            let n = file.read(&mut buf).ok()?;
            if n == 0 {
                break;
            }
            hasher.update(&buf[..n]);
            size += n as u64;
        }
        Some(FileInfo {
            size,
            crc32: hasher.finalize(),
        })
    }

    fn read(&self, name: &str, offset: u64, len: usize) -> Option<Bytes> {
        let mut file = File::open(self.resolve(name)?).ok()?;
        file.seek(SeekFrom::Start(offset)).ok()?;
        let mut buf = vec![0u8; len];
        file.read_exact(&mut buf).ok()?;
        Some(Bytes::from(buf))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn memory_store_slices() {
        let store = MemoryStore::new().with_file("f", b"hello world".to_vec());
        let info = store.info("f").unwrap();
        assert_eq!(info.size, 11);
        assert_eq!(info.crc32, crc32fast::hash(b"hello world"));
        assert_eq!(store.read("f", 6, 5).unwrap(), Bytes::from_static(b"world"));
        assert!(store.read("f", 6, 6).is_none());
        assert!(store.info("g").is_none());
    }

    #[test]
    fn dir_store_guards_traversal() {
        let outer = tempfile::tempdir().unwrap();
        let root = outer.path().join("root");
        std::fs::create_dir_all(root.join("sub")).unwrap();
        std::fs::write(root.join("sub/a.bin"), b"abcdef").unwrap();
        std::fs::write(outer.path().join("secret"), b"x").unwrap();

        let store = DirStore::new(&root).unwrap();
        assert_eq!(store.info("sub/a.bin").unwrap().size, 6);
        assert_eq!(
            store.read("sub/a.bin", 2, 3).unwrap(),
            Bytes::from_static(b"cde")
        );
        assert!(store.info("../secret").is_none());
        assert!(store.info("sub/../../secret").is_none());
        assert!(store
            .info(outer.path().join("secret").to_str().unwrap())
            .is_none());
        assert!(store.info("sub").is_none());
        assert!(store.info("").is_none());

        #[cfg(unix)]
        {
            std::os::unix::fs::symlink(outer.path().join("secret"), root.join("link")).unwrap();
            assert!(store.info("link").is_none());
        }
    }
}
