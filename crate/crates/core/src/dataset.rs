//! Directory-per-class image datasets: scanning, decoding, resizing and the
//! stratified train/test split.
//!
//! A dataset root holds one subdirectory per class, each containing image
//! files (`png`, `jpg`, `jpeg` or `bmp`, any case). Classes are ordered by
//! folder name and entries by `(class, relative path)`, so two scans of the
//! same tree yield identical indexes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// Side length every image is resized to before feature extraction.
pub const IMAGE_SIDE: usize = 224;

pub const IMAGE_EXTENSIONS: [&str; 4] = ["png", "jpg", "jpeg", "bmp"];

/// One labeled file. `path` is relative to the dataset root and always uses
/// `/` as separator.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DatasetEntry {
    pub class_id: u32,
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetIndex {
    root: PathBuf,
    class_names: Vec<String>,
    entries: Vec<DatasetEntry>,
}

impl DatasetIndex {
    /// Builds an index from parts, restoring the canonical ordering.
    pub fn from_parts(
        root: impl Into<PathBuf>,
        class_names: Vec<String>,
        mut entries: Vec<DatasetEntry>,
    ) -> Result<Self> {
        let mut sorted = class_names.clone();
        sorted.sort();
        sorted.dedup();
        if sorted != class_names {
            return Err(Error::Format("class names must be sorted and unique".to_string()));
        }
        for entry in &entries {
            if entry.class_id as usize >= class_names.len() {
                return Err(Error::InvalidLabel {
                    label: entry.class_id,
                    classes: class_names.len(),
                });
            }
        }
        for (class_id, name) in class_names.iter().enumerate() {
            if !entries.iter().any(|e| e.class_id as usize == class_id) {
                return Err(Error::EmptyClass(name.clone()));
            }
        }
        entries.sort();
        Ok(Self {
            root: root.into(),
            class_names,
            entries,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn entries(&self) -> &[DatasetEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn absolute_path(&self, entry: &DatasetEntry) -> PathBuf {
        self.root.join(&entry.path)
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_names.len()];
        for e in &self.entries {
            counts[e.class_id as usize] += 1;
        }
        counts
    }

    /// `class_name<TAB>relative_path` per entry, in index order.
    pub fn listing(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let _ = writeln!(out, "{}\t{}", self.class_names[e.class_id as usize], e.path);
        }
        out
    }
}

fn has_image_extension(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| {
            let e = e.to_ascii_lowercase();
            IMAGE_EXTENSIONS.contains(&e.as_str())
        })
        .unwrap_or(false)
}

fn is_hidden(name: &str) -> bool {
    name.starts_with('.')
}

/// Lists `root/<class>/*.{png,jpg,jpeg,bmp}`.
///
/// Every immediate (non-hidden) subdirectory is a class and must contain at
/// least one image.
pub fn scan_dataset(root: impl AsRef<Path>) -> Result<DatasetIndex> {
    let root = root.as_ref();
    if !root.is_dir() {
        return Err(Error::PathNotFound(root.to_path_buf()));
    }

    let mut class_dirs = Vec::new();
    for item in fs::read_dir(root)? {
        let item = item?;
        let name = item.file_name().to_string_lossy().into_owned();
        if is_hidden(&name) || !item.file_type()?.is_dir() {
            continue;
        }
        class_dirs.push(name);
    }
    class_dirs.sort();
    if class_dirs.is_empty() {
        return Err(Error::EmptyClass(format!(
            "<no class folders under {}>",
            root.display()
        )));
    }

    let listed: Vec<Result<Vec<String>>> = class_dirs
        .par_iter()
        .map(|class| {
            let mut files = Vec::new();
            for item in fs::read_dir(root.join(class))? {
                let item = item?;
                let name = item.file_name().to_string_lossy().into_owned();
                if is_hidden(&name) || !item.file_type()?.is_file() {
                    continue;
                }
                if has_image_extension(Path::new(&name)) {
                    files.push(format!("{class}/{name}"));
                }
            }
            files.sort();
            Ok(files)
        })
        .collect();

    let mut entries = Vec::new();
    for (class_id, (class, files)) in class_dirs.iter().zip(listed).enumerate() {
        let files = files?;
        if files.is_empty() {
            return Err(Error::EmptyClass(class.clone()));
        }
        entries.extend(files.into_iter().map(|path| DatasetEntry {
            class_id: class_id as u32,
            path,
        }));
    }

    Ok(DatasetIndex {
        root: root.to_path_buf(),
        class_names: class_dirs,
        entries,
    })
}

/// Decoded image, `height × width × 3` RGB values in `[0, 1]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTensor {
    height: usize,
    width: usize,
    pixels: Vec<f32>,
}

impl ImageTensor {
    pub fn new(height: usize, width: usize, pixels: Vec<f32>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::ShapeMismatch("image has a zero dimension".into()));
        }
        if pixels.len() != height * width * 3 {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {height}x{width}x3 image",
                pixels.len()
            )));
        }
        if let Some(bad) = pixels.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::DegenerateInput(format!("pixel value {bad} outside [0, 1]")));
        }
        Ok(Self { height, width, pixels })
    }

    pub fn solid(height: usize, width: usize, rgb: [f32; 3]) -> Self {
        let pixels = (0..height * width).flat_map(|_| rgb).collect();
        Self::new(height, width, pixels).expect("valid solid image")
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixels(&self) -> &[f32] {
        &self.pixels
    }

    pub fn pixel(&self, y: usize, x: usize) -> [f32; 3] {
        let i = (y * self.width + x) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    /// Bilinear resize with half-pixel centres (sample position
    /// `(i + 0.5) * in / out - 0.5`, clamped at the borders).
    pub fn resize_bilinear(&self, height: usize, width: usize) -> ImageTensor {
        if height == self.height && width == self.width {
            return self.clone();
        }
        let ys = axis_weights(self.height, height);
        let xs = axis_weights(self.width, width);
        let mut pixels = vec![0f32; height * width * 3];
        for (oy, &(y0, y1, wy)) in ys.iter().enumerate() {
            for (ox, &(x0, x1, wx)) in xs.iter().enumerate() {
                let a = self.pixel(y0, x0);
                let b = self.pixel(y0, x1);
                let c = self.pixel(y1, x0);
                let d = self.pixel(y1, x1);
                let out = &mut pixels[(oy * width + ox) * 3..][..3];
                for ch in 0..3 {
                    let top = lerp(a[ch], b[ch], wx);
                    let bottom = lerp(c[ch], d[ch], wx);
                    out[ch] = (top + (bottom - top) * wy).clamp(0.0, 1.0) as f32;
                }
            }
        }
        ImageTensor { height, width, pixels }
    }

    fn from_rgb32f(img: &image::Rgb32FImage) -> Self {
        let pixels = img
            .as_raw()
            .iter()
            .map(|v| if v.is_finite() { v.clamp(0.0, 1.0) } else { 0.0 })
            .collect();
        Self {
            height: img.height() as usize,
            width: img.width() as usize,
            pixels,
        }
    }
}

// Written as a + (b - a) * t so constant inputs stay exactly constant.
fn lerp(a: f32, b: f32, t: f64) -> f64 {
    let a = f64::from(a);
    a + (f64::from(b) - a) * t
}

fn axis_weights(input: usize, output: usize) -> Vec<(usize, usize, f64)> {
    let scale = input as f64 / output as f64;
    (0..output)
        .map(|i| {
            let src = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (input - 1) as f64);
            let lo = src.floor() as usize;
            let hi = (lo + 1).min(input - 1);
            (lo, hi, src - lo as f64)
        })
        .collect()
}

/// Decodes `path` and resizes it to `IMAGE_SIDE × IMAGE_SIDE`.
pub fn load_image(path: impl AsRef<Path>) -> Result<ImageTensor> {
    load_image_sized(path, (IMAGE_SIDE, IMAGE_SIDE))
}

/// Decodes `path` into canonical RGB and bilinearly resizes it to
/// `(height, width)`. Grayscale sources are replicated into all three
/// channels and alpha is dropped.
pub fn load_image_sized(path: impl AsRef<Path>, target: (usize, usize)) -> Result<ImageTensor> {
    let path = path.as_ref();
    let decode_err = |reason: String| Error::Decode {
        path: path.to_path_buf(),
        reason,
    };
    let reader = image::ImageReader::open(path)
        .map_err(|e| decode_err(e.to_string()))?
        .with_guessed_format()
        .map_err(|e| decode_err(e.to_string()))?;
    let decoded = reader.decode().map_err(|e| decode_err(e.to_string()))?;
    if decoded.width() == 0 || decoded.height() == 0 {
        return Err(decode_err("image has a zero dimension".into()));
    }
    let rgb = ImageTensor::from_rgb32f(&decoded.to_rgb32f());
    Ok(rgb.resize_bilinear(target.0, target.1))
}

/// Deterministic train/test partition of a [`DatasetIndex`]. Both lists hold
/// positions into `index.entries()` in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitIndex {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
    pub test_fraction: f64,
}

/// `floor(x + 0.5)`, with a small allowance so products such as `0.2 * 345`
/// that land a hair under an exact half still round up.
pub fn round_half_up(x: f64) -> usize {
    (x + 0.5 + 1e-9).floor().max(0.0) as usize
}

/// Number of entries held out for a class of size `n`.
pub fn test_count(test_fraction: f64, n: usize) -> usize {
    round_half_up(test_fraction * n as f64)
}

/// Stratified split: within each class the entries are shuffled with
/// `SeededRng::derive(seed, class_id)` and the first
/// `round_half_up(test_fraction * n_c)` become test entries.
pub fn stratified_split(index: &DatasetIndex, test_fraction: f64, seed: u64) -> Result<SplitIndex> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidHyperparameter(format!(
            "test_fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let mut per_class: Vec<Vec<usize>> = vec![Vec::new(); index.n_classes()];
    for (pos, e) in index.entries().iter().enumerate() {
        per_class[e.class_id as usize].push(pos);
    }

    let mut train = Vec::with_capacity(index.len());
    let mut test = Vec::new();
    for (class_id, mut members) in per_class.into_iter().enumerate() {
        let total = members.len();
        let held_out = test_count(test_fraction, total);
        if held_out == 0 || held_out >= total {
            return Err(Error::DegenerateSplit {
                class: index.class_names()[class_id].clone(),
                test: held_out,
                total,
            });
        }
        SeededRng::derive(seed, class_id as u64).shuffle(&mut members);
        test.extend_from_slice(&members[..held_out]);
        train.extend_from_slice(&members[held_out..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitIndex {
        train,
        test,
        seed,
        test_fraction,
    })
}

impl SplitIndex {
    /// Manifest text: one `train|test<TAB>class<TAB>relative_path` line per
    /// entry, lines sorted.
    pub fn manifest(&self, index: &DatasetIndex) -> String {
        let mut lines: Vec<String> = self
            .train
            .iter()
            .map(|&i| ("train", i))
            .chain(self.test.iter().map(|&i| ("test", i)))
            .map(|(side, i)| {
                let e = &index.entries()[i];
                format!("{side}\t{}\t{}", index.class_names()[e.class_id as usize], e.path)
            })
            .collect();
        lines.sort();
        let mut out = lines.join("\n");
        out.push('\n');
        out
    }

    /// SHA-256 of the manifest; identifies the train/test membership.
    pub fn signature(&self, index: &DatasetIndex) -> String {
        hex::encode(Sha256::digest(self.manifest(index).as_bytes()))
    }

    pub fn test_counts(&self, index: &DatasetIndex) -> Vec<usize> {
        let mut counts = vec![0; index.n_classes()];
        for &i in &self.test {
            counts[index.entries()[i].class_id as usize] += 1;
        }
        counts
    }

    pub fn write_manifest(&self, index: &DatasetIndex, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.manifest(index))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::{GrayImage, Luma, Rgb, RgbImage};
    use proptest::prelude::*;

    fn synthetic_index(counts: &[usize]) -> DatasetIndex {
        let names: Vec<String> = (0..counts.len()).map(|c| format!("class{c}")).collect();
        let entries = counts
            .iter()
            .enumerate()
            .flat_map(|(c, &n)| {
                (0..n).map(move |i| DatasetEntry {
                    class_id: c as u32,
                    path: format!("class{c}/{i:05}.png"),
                })
            })
            .collect();
        DatasetIndex::from_parts("/nowhere", names, entries).unwrap()
    }

    #[test]
    fn lemon_counts_split_160_40() {
        let index = synthetic_index(&[50, 50, 50, 50]);
        let split = stratified_split(&index, 0.2, 0).unwrap();
        assert_eq!(split.train.len(), 160);
        assert_eq!(split.test.len(), 40);
        assert_eq!(split.test_counts(&index), vec![10, 10, 10, 10]);
    }

    #[test]
    fn orange_counts_split_1291_323() {
        let index = synthetic_index(&[344, 349, 552, 369]);
        let split = stratified_split(&index, 0.2, 9).unwrap();
        assert_eq!(split.train.len(), 1291);
        assert_eq!(split.test.len(), 323);
        assert_eq!(split.test_counts(&index), vec![69, 70, 110, 74]);
    }

    #[test]
    fn split_rejects_degenerate_classes() {
        let index = synthetic_index(&[1, 10]);
        assert!(matches!(
            stratified_split(&index, 0.2, 0),
            Err(Error::DegenerateSplit { test: 0, total: 1, .. })
        ));
        let index = synthetic_index(&[2, 10]);
        assert!(matches!(
            stratified_split(&index, 0.9, 0),
            Err(Error::DegenerateSplit { .. })
        ));
        assert!(stratified_split(&index, 0.0, 0).is_err());
        assert!(stratified_split(&index, 1.0, 0).is_err());
    }

    #[test]
    fn round_half_up_rounds_halves_up() {
        assert_eq!(round_half_up(68.8), 69);
        assert_eq!(round_half_up(69.8), 70);
        assert_eq!(round_half_up(110.4), 110);
        assert_eq!(round_half_up(73.8), 74);
        assert_eq!(round_half_up(2.5), 3);
        assert_eq!(test_count(0.5, 3), 2);
        assert_eq!(test_count(0.1, 5), 1);
        assert_eq!(test_count(0.3, 5), 2);
    }

    #[test]
    fn split_depends_on_seed() {
        let index = synthetic_index(&[30, 30]);
        let a = stratified_split(&index, 0.2, 1).unwrap();
        let b = stratified_split(&index, 0.2, 2).unwrap();
        assert_ne!(a.test, b.test);
        assert_eq!(a, stratified_split(&index, 0.2, 1).unwrap());
    }

    proptest! {
        #[test]
        fn split_partitions_index(counts in prop::collection::vec(5usize..60, 1..6), seed: u64) {
            let index = synthetic_index(&counts);
            let split = stratified_split(&index, 0.2, seed).unwrap();
            let mut all: Vec<usize> = split.train.iter().chain(&split.test).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..index.len()).collect::<Vec<_>>());
            let expected: Vec<usize> = counts.iter().map(|&n| test_count(0.2, n)).collect();
            prop_assert_eq!(split.test_counts(&index), expected);
            prop_assert_eq!(split.manifest(&index), stratified_split(&index, 0.2, seed).unwrap().manifest(&index));
        }
    }

    fn write_tree(root: &Path, layout: &[(&str, usize)]) {
        for (class, n) in layout {
            let dir = root.join(class);
            fs::create_dir_all(&dir).unwrap();
            for i in 0..*n {
                RgbImage::from_pixel(4, 4, Rgb([i as u8, 0, 0]))
                    .save(dir.join(format!("img{i}.png")))
                    .unwrap();
            }
        }
    }

    #[test]
    fn scan_orders_classes_and_entries() {
        let dir = tempfile::tempdir().unwrap();
        write_tree(dir.path(), &[("scab", 2), ("canker", 3), ("healthy", 1)]);
        fs::write(dir.path().join("canker/notes.txt"), "x").unwrap();
        RgbImage::new(2, 2).save(dir.path().join("canker/UPPER.PNG")).unwrap();

        let index = scan_dataset(dir.path()).unwrap();
        assert_eq!(index.class_names(), ["canker", "healthy", "scab"]);
        assert_eq!(index.class_counts(), vec![4, 1, 2]);
        assert_eq!(index.entries()[0].path, "canker/UPPER.PNG");
        assert_eq!(index, scan_dataset(dir.path()).unwrap());
        assert_eq!(index.listing(), scan_dataset(dir.path()).unwrap().listing());
    }

    #[test]
    fn scan_rejects_empty_class_and_missing_root() {
        let dir = tempfile::tempdir().unwrap();
        write_tree(dir.path(), &[("a", 2)]);
        fs::create_dir(dir.path().join("b")).unwrap();
        assert!(matches!(scan_dataset(dir.path()), Err(Error::EmptyClass(c)) if c == "b"));
        assert!(matches!(
            scan_dataset(dir.path().join("missing")),
            Err(Error::PathNotFound(_))
        ));
        let empty = tempfile::tempdir().unwrap();
        assert!(matches!(scan_dataset(empty.path()), Err(Error::EmptyClass(_))));
    }

    #[test]
    fn solid_red_224_is_identity() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("red.png");
        RgbImage::from_pixel(224, 224, Rgb([255, 0, 0])).save(&path).unwrap();
        let img = load_image(&path).unwrap();
        assert_eq!((img.height(), img.width()), (224, 224));
        assert!(img.pixels().chunks(3).all(|p| p == [1.0, 0.0, 0.0]));
    }

    #[test]
    fn constant_gray_resizes_to_constant() {
        let small = ImageTensor::solid(2, 2, [0.5, 0.5, 0.5]);
        let big = small.resize_bilinear(224, 224);
        // Oracle: the image crate's triangle-filter resize of the same image.
        let oracle = image::imageops::resize(
            &image::Rgb32FImage::from_pixel(2, 2, Rgb([0.5, 0.5, 0.5])),
            224,
            224,
            image::imageops::FilterType::Triangle,
        );
        for (ours, theirs) in big.pixels().iter().zip(oracle.as_raw()) {
            assert!((ours - theirs).abs() < 1e-6);
            assert_eq!(*ours, 0.5);
        }
    }

    #[test]
    fn bilinear_matches_hand_interpolation() {
        // 1x2 image [0, 1] upsampled to 1x4: positions -0.25, 0.25, 0.75, 1.25.
        let img = ImageTensor::new(1, 2, vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0]).unwrap();
        let out = img.resize_bilinear(1, 4);
        let red: Vec<f32> = out.pixels().chunks(3).map(|p| p[0]).collect();
        assert_eq!(red, vec![0.0, 0.25, 0.75, 1.0]);
    }

    #[test]
    fn grayscale_is_replicated() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.png");
        GrayImage::from_fn(8, 8, |x, y| Luma([(x * 30 + y) as u8]))
            .save(&path)
            .unwrap();
        let img = load_image(&path).unwrap();
        assert!(img.pixels().chunks(3).all(|p| p[0] == p[1] && p[1] == p[2]));
    }

    #[test]
    fn undecodable_file_is_decode_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("broken.png");
        fs::write(&path, b"definitely not a png").unwrap();
        assert!(matches!(load_image(&path), Err(Error::Decode { .. })));
    }

    proptest! {
        #[test]
        fn resize_stays_in_unit_range(
            h in 1usize..6, w in 1usize..6,
            seed: u64, oh in 1usize..20, ow in 1usize..20,
        ) {
            let mut rng = SeededRng::new(seed);
            let pixels = (0..h * w * 3).map(|_| rng.next_f64() as f32).collect();
            let img = ImageTensor::new(h, w, pixels).unwrap();
            let out = img.resize_bilinear(oh, ow);
            prop_assert!(out.pixels().iter().all(|v| v.is_finite() && (0.0..=1.0).contains(v)));
        }
    }
}
