//! File formats: 16-bit depth PNGs, 8-bit label and validity PNGs, 48-bit
//! normal storage with a validity sidecar, JSON intrinsics, and the two
//! visualization encodings. All writers are deterministic.

use std::fs;
use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageBuffer, Luma, Rgb};

use crate::error::{Error, Result};
use crate::metrics::AngleErrorMap;
use crate::types::{CameraIntrinsics, DepthImage, Grid, LabelMap, NormalMap, Vec3};

/// One stored normal sample: each component mapped from [-1, 1] onto the
/// full 16-bit range.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EncodedNormalPixel {
    pub r16: u16,
    pub g16: u16,
    pub b16: u16,
}

/// Quantizes a normal component-wise: `round((c + 1)/2 * 65535)`.
pub fn encode_normal(n: Vec3) -> EncodedNormalPixel {
    let enc = |c: f64| ((c + 1.0) / 2.0 * 65535.0).round().clamp(0.0, 65535.0) as u16;
    EncodedNormalPixel {
        r16: enc(n.x),
        g16: enc(n.y),
        b16: enc(n.z),
    }
}

/// Inverse of [`encode_normal`] before renormalization; the per-component
/// quantization error is at most 1/32768.
pub fn decode_normal(e: EncodedNormalPixel) -> Vec3 {
    let dec = |q: u16| q as f64 / 65535.0 * 2.0 - 1.0;
    Vec3::new(dec(e.r16), dec(e.g16), dec(e.b16))
}

fn image_error(e: image::ImageError) -> Error {
    match e {
        image::ImageError::IoError(io) => Error::Io(io),
        other => Error::Format(other.to_string()),
    }
}

fn open_image(path: &Path) -> Result<DynamicImage> {
    image::open(path).map_err(image_error)
}

/// Reads a single-channel 16-bit PNG as metric depth.
/// `depth = raw * scale_mm_per_unit / 1000` meters; raw 0 means invalid.
pub fn read_depth_png16(path: &Path, scale_mm_per_unit: f64) -> Result<DepthImage> {
    if scale_mm_per_unit.is_nan() || scale_mm_per_unit <= 0.0 {
        return Err(Error::config("depth scale must be positive"));
    }
    let img = match open_image(path)? {
        DynamicImage::ImageLuma16(img) => img,
        _ => {
            return Err(Error::format(format!(
                "{}: expected single-channel 16-bit PNG",
                path.display()
            )))
        }
    };
    let (w, h) = (img.width() as usize, img.height() as usize);
    let mut depth = Grid::filled(w, h, 0.0);
    let mut valid = Grid::filled(w, h, false);
    for v in 0..h {
        for u in 0..w {
            let raw = img.get_pixel(u as u32, v as u32)[0];
            if raw > 0 {
                depth[(u, v)] = raw as f64 * scale_mm_per_unit / 1000.0;
                valid[(u, v)] = true;
            }
        }
    }
    DepthImage::new(depth, valid)
}

/// Writes depth as a single-channel 16-bit PNG. Valid pixels are stored as
/// `round(z * 1000 / scale_mm_per_unit)` clamped to [1, 65535]; invalid
/// pixels are stored as 0.
pub fn write_depth_png16(d: &DepthImage, path: &Path, scale_mm_per_unit: f64) -> Result<()> {
    if scale_mm_per_unit.is_nan() || scale_mm_per_unit <= 0.0 {
        return Err(Error::config("depth scale must be positive"));
    }
    let (w, h) = (d.width(), d.height());
    let mut img: ImageBuffer<Luma<u16>, Vec<u16>> = ImageBuffer::new(w as u32, h as u32);
    for v in 0..h {
        for u in 0..w {
            let raw = if d.valid[(u, v)] {
                (d.depth[(u, v)] * 1000.0 / scale_mm_per_unit)
                    .round()
                    .clamp(1.0, 65535.0) as u16
            } else {
                0
            };
            img.put_pixel(u as u32, v as u32, Luma([raw]));
        }
    }
    img.save(path).map_err(image_error)
}

/// Reads an 8-bit grayscale PNG of class IDs.
pub fn read_label_png8(path: &Path) -> Result<LabelMap> {
    let img = match open_image(path)? {
        DynamicImage::ImageLuma8(img) => img,
        _ => {
            return Err(Error::format(format!(
                "{}: expected single-channel 8-bit PNG",
                path.display()
            )))
        }
    };
    let (w, h) = (img.width() as usize, img.height() as usize);
    let mut labels = Grid::filled(w, h, 0u8);
    for v in 0..h {
        for u in 0..w {
            labels[(u, v)] = img.get_pixel(u as u32, v as u32)[0];
        }
    }
    LabelMap::new(labels)
}

pub fn write_label_png8(lm: &LabelMap, path: &Path) -> Result<()> {
    let (w, h) = (lm.width(), lm.height());
    let mut img: ImageBuffer<Luma<u8>, Vec<u8>> = ImageBuffer::new(w as u32, h as u32);
    for v in 0..h {
        for u in 0..w {
            img.put_pixel(u as u32, v as u32, Luma([lm.labels[(u, v)]]));
        }
    }
    img.save(path).map_err(image_error)
}

/// Writes a boolean mask as an 8-bit grayscale PNG (255 true, 0 false).
pub fn write_mask_png8(mask: &Grid<bool>, path: &Path) -> Result<()> {
    let (w, h) = (mask.width(), mask.height());
    let mut img: ImageBuffer<Luma<u8>, Vec<u8>> = ImageBuffer::new(w as u32, h as u32);
    for v in 0..h {
        for u in 0..w {
            img.put_pixel(u as u32, v as u32, Luma([if mask[(u, v)] { 255 } else { 0 }]));
        }
    }
    img.save(path).map_err(image_error)
}

/// Reads an 8-bit grayscale PNG as a boolean mask (nonzero is true).
pub fn read_mask_png8(path: &Path) -> Result<Grid<bool>> {
    let img = match open_image(path)? {
        DynamicImage::ImageLuma8(img) => img,
        _ => {
            return Err(Error::format(format!(
                "{}: expected single-channel 8-bit PNG",
                path.display()
            )))
        }
    };
    let (w, h) = (img.width() as usize, img.height() as usize);
    let mut mask = Grid::filled(w, h, false);
    for v in 0..h {
        for u in 0..w {
            mask[(u, v)] = img.get_pixel(u as u32, v as u32)[0] != 0;
        }
    }
    Ok(mask)
}

/// RGB visualization of a normal map: channel `c = round((n_c + 1)/2 * 255)`
/// for valid pixels, black for invalid ones.
pub fn write_normal_viz(nm: &NormalMap, path: &Path) -> Result<()> {
    let (w, h) = (nm.width(), nm.height());
    let mut img: ImageBuffer<Rgb<u8>, Vec<u8>> = ImageBuffer::new(w as u32, h as u32);
    for v in 0..h {
        for u in 0..w {
            let px = if nm.valid[(u, v)] {
                let n = nm.normals[(u, v)];
                let enc = |c: f64| ((c + 1.0) / 2.0 * 255.0).round().clamp(0.0, 255.0) as u8;
                Rgb([enc(n.x), enc(n.y), enc(n.z)])
            } else {
                Rgb([0, 0, 0])
            };
            img.put_pixel(u as u32, v as u32, px);
        }
    }
    img.save(path).map_err(image_error)
}

/// Color for one angle error: black under 11.25 degrees, then a linear ramp
/// from yellow at 11.25 to purple at 90, clamped above 90.
pub fn error_color(error_deg: f64) -> [u8; 3] {
    if error_deg < 11.25 {
        return [0, 0, 0];
    }
    let t = ((error_deg.min(90.0) - 11.25) / (90.0 - 11.25)).clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64| (a + t * (b - a)).round().clamp(0.0, 255.0) as u8;
    [lerp(255.0, 128.0), lerp(255.0, 0.0), lerp(0.0, 128.0)]
}

/// Writes the error colormap; invalid pixels are mid-gray.
pub fn write_error_viz(err: &AngleErrorMap, path: &Path) -> Result<()> {
    let (w, h) = (err.deg.width(), err.deg.height());
    let mut img: ImageBuffer<Rgb<u8>, Vec<u8>> = ImageBuffer::new(w as u32, h as u32);
    for v in 0..h {
        for u in 0..w {
            let px = if err.valid[(u, v)] {
                error_color(err.deg[(u, v)])
            } else {
                [128, 128, 128]
            };
            img.put_pixel(u as u32, v as u32, Rgb(px));
        }
    }
    img.save(path).map_err(image_error)
}

/// Sidecar path holding the validity mask for a 48-bit normal PNG:
/// `normals.png` pairs with `normals.valid.png`.
pub fn validity_sidecar_path(path: &Path) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}.valid.png"))
}

/// Writes a normal map as a 16-bit RGB PNG plus an 8-bit validity sidecar
/// (255 valid, 0 invalid). Invalid pixels store zeros.
pub fn write_normals_png48(nm: &NormalMap, path: &Path) -> Result<()> {
    let (w, h) = (nm.width(), nm.height());
    let mut img: ImageBuffer<Rgb<u16>, Vec<u16>> = ImageBuffer::new(w as u32, h as u32);
    let mut mask: ImageBuffer<Luma<u8>, Vec<u8>> = ImageBuffer::new(w as u32, h as u32);
    for v in 0..h {
        for u in 0..w {
            if nm.valid[(u, v)] {
                let e = encode_normal(nm.normals[(u, v)]);
                img.put_pixel(u as u32, v as u32, Rgb([e.r16, e.g16, e.b16]));
                mask.put_pixel(u as u32, v as u32, Luma([255]));
            } else {
                img.put_pixel(u as u32, v as u32, Rgb([0, 0, 0]));
                mask.put_pixel(u as u32, v as u32, Luma([0]));
            }
        }
    }
    img.save(path).map_err(image_error)?;
    mask.save(validity_sidecar_path(path)).map_err(image_error)
}

/// Reads a 48-bit normal PNG and its validity sidecar. Decoded normals are
/// renormalized to undo quantization.
pub fn read_normals_png48(path: &Path) -> Result<NormalMap> {
    let img = match open_image(path)? {
        DynamicImage::ImageRgb16(img) => img,
        _ => {
            return Err(Error::format(format!(
                "{}: expected 3x16-bit RGB PNG",
                path.display()
            )))
        }
    };
    let sidecar = validity_sidecar_path(path);
    let mask = match open_image(&sidecar)? {
        DynamicImage::ImageLuma8(img) => img,
        _ => {
            return Err(Error::format(format!(
                "{}: expected single-channel 8-bit PNG",
                sidecar.display()
            )))
        }
    };
    if img.dimensions() != mask.dimensions() {
        return Err(Error::format(
            "normal image and validity sidecar differ in size",
        ));
    }
    let (w, h) = (img.width() as usize, img.height() as usize);
    let mut normals = Grid::filled(w, h, Vec3::ZERO);
    let mut valid = Grid::filled(w, h, false);
    for v in 0..h {
        for u in 0..w {
            if mask.get_pixel(u as u32, v as u32)[0] == 0 {
                continue;
            }
            let px = img.get_pixel(u as u32, v as u32);
            let raw = decode_normal(EncodedNormalPixel {
                r16: px[0],
                g16: px[1],
                b16: px[2],
            });
            normals[(u, v)] = raw
                .normalized()
                .map_err(|_| Error::format("stored normal too small to renormalize"))?;
            valid[(u, v)] = true;
        }
    }
    NormalMap::new(normals, valid)
}

/// Reads pinhole intrinsics from a JSON file with keys fx, fy, cx, cy,
/// width, height.
pub fn read_intrinsics(path: &Path) -> Result<CameraIntrinsics> {
    let text = fs::read_to_string(path)?;
    let k: CameraIntrinsics =
        serde_json::from_str(&text).map_err(|e| Error::format(e.to_string()))?;
    k.validate()?;
    Ok(k)
}

pub fn write_intrinsics(k: &CameraIntrinsics, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(k).map_err(|e| Error::format(e.to_string()))?;
    fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use tempfile::TempDir;

    fn tmp() -> TempDir {
        TempDir::new().unwrap()
    }

    #[test]
    fn encode_decode_error_bound_over_random_units() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10_000 {
            let n = Vec3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            let Ok(n) = n.normalized() else { continue };
            let back = decode_normal(encode_normal(n));
            let bound = 1.0 / 32768.0;
            assert!((back.x - n.x).abs() <= bound);
            assert!((back.y - n.y).abs() <= bound);
            assert!((back.z - n.z).abs() <= bound);
        }
    }

    #[test]
    fn encode_examples() {
        let e = encode_normal(Vec3::new(0.0, 0.0, -1.0));
        assert_eq!((e.r16, e.g16, e.b16), (32768, 32768, 0));
    }

    #[test]
    fn depth_round_trip_and_conventions() {
        let dir = tmp();
        let path = dir.path().join("depth.png");
        // Write a raw buffer directly so the read path is exercised alone.
        let mut img: ImageBuffer<Luma<u16>, Vec<u16>> = ImageBuffer::new(3, 1);
        img.put_pixel(0, 0, Luma([2000]));
        img.put_pixel(1, 0, Luma([0]));
        img.put_pixel(2, 0, Luma([1234]));
        img.save(&path).unwrap();

        let d = read_depth_png16(&path, 1.0).unwrap();
        assert_eq!(d.depth[(0, 0)], 2.0);
        assert!(d.valid[(0, 0)]);
        assert!(!d.valid[(1, 0)], "raw 0 is the sensor-hole convention");

        let d = read_depth_png16(&path, 0.25).unwrap();
        assert!((d.depth[(2, 0)] - 0.30850).abs() < 1e-9);

        // Full write/read cycle.
        let out = dir.path().join("depth2.png");
        write_depth_png16(&d, &out, 0.25).unwrap();
        let again = read_depth_png16(&out, 0.25).unwrap();
        assert_eq!(again, d);
    }

    #[test]
    fn depth_read_rejects_wrong_bit_depth_and_missing_file() {
        let dir = tmp();
        let path = dir.path().join("depth8.png");
        let img: ImageBuffer<Luma<u8>, Vec<u8>> = ImageBuffer::new(2, 2);
        img.save(&path).unwrap();
        assert!(matches!(
            read_depth_png16(&path, 1.0),
            Err(Error::Format(_))
        ));
        assert!(matches!(
            read_depth_png16(&dir.path().join("missing.png"), 1.0),
            Err(Error::Io(_))
        ));
    }

    #[test]
    fn normal_viz_pixel_encoding() {
        let dir = tmp();
        let mut nm = NormalMap::invalid(3, 1);
        nm.normals[(0, 0)] = Vec3::new(0.0, 0.0, -1.0);
        nm.valid[(0, 0)] = true;
        nm.normals[(1, 0)] = Vec3::new(1.0, 0.0, 0.0);
        nm.valid[(1, 0)] = true;
        let path = dir.path().join("viz.png");
        write_normal_viz(&nm, &path).unwrap();
        let img = open_image(&path).unwrap().into_rgb8();
        assert_eq!(img.get_pixel(0, 0).0, [128, 128, 0]);
        assert_eq!(img.get_pixel(1, 0).0, [255, 128, 128]);
        assert_eq!(img.get_pixel(2, 0).0, [0, 0, 0], "invalid pixels are black");
    }

    #[test]
    fn error_colormap_endpoints() {
        assert_eq!(error_color(5.0), [0, 0, 0]);
        assert_eq!(error_color(11.25), [255, 255, 0]);
        assert_eq!(error_color(90.0), [128, 0, 128]);
        assert_eq!(error_color(150.0), [128, 0, 128], "clamped above 90");
        let mid = error_color(50.0);
        assert!(mid[0] > 128 && mid[0] < 255);
    }

    #[test]
    fn error_viz_marks_invalid_as_gray() {
        let dir = tmp();
        let err = AngleErrorMap {
            deg: Grid::from_vec(2, 1, vec![5.0, 45.0]).unwrap(),
            valid: Grid::from_vec(2, 1, vec![true, false]).unwrap(),
        };
        let path = dir.path().join("err.png");
        write_error_viz(&err, &path).unwrap();
        let img = open_image(&path).unwrap().into_rgb8();
        assert_eq!(img.get_pixel(0, 0).0, [0, 0, 0]);
        assert_eq!(img.get_pixel(1, 0).0, [128, 128, 128]);
    }

    #[test]
    fn normals_png48_round_trip() {
        let dir = tmp();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (w, h) = (40, 25);
        let mut nm = NormalMap::invalid(w, h);
        for v in 0..h {
            for u in 0..w {
                if rng.random::<f64>() < 0.8 {
                    let n = Vec3::new(
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                    );
                    if let Ok(n) = n.normalized() {
                        nm.normals[(u, v)] = n;
                        nm.valid[(u, v)] = true;
                    }
                }
            }
        }
        let path = dir.path().join("normals.png");
        write_normals_png48(&nm, &path).unwrap();
        assert!(dir.path().join("normals.valid.png").exists());
        let back = read_normals_png48(&path).unwrap();
        assert_eq!(back.valid, nm.valid, "validity round trip is exact");
        for v in 0..h {
            for u in 0..w {
                if nm.valid[(u, v)] {
                    let a = nm.normals[(u, v)];
                    let b = back.normals[(u, v)];
                    assert!((a - b).norm() < 1e-4, "at ({u},{v}): {a:?} vs {b:?}");
                    assert!((b.norm() - 1.0).abs() < 1e-12, "renormalized on read");
                }
            }
        }
    }

    #[test]
    fn sidecar_dimension_mismatch_is_format_error() {
        let dir = tmp();
        let nm = NormalMap::invalid(4, 4);
        let path = dir.path().join("n.png");
        write_normals_png48(&nm, &path).unwrap();
        let bad: ImageBuffer<Luma<u8>, Vec<u8>> = ImageBuffer::new(3, 3);
        bad.save(validity_sidecar_path(&path)).unwrap();
        assert!(matches!(read_normals_png48(&path), Err(Error::Format(_))));
    }

    #[test]
    fn writers_are_byte_deterministic() {
        let dir = tmp();
        let mut nm = NormalMap::invalid(16, 12);
        for v in 0..12 {
            for u in 0..16 {
                nm.normals[(u, v)] = Vec3::new(0.3, -0.4, -0.5).normalized().unwrap();
                nm.valid[(u, v)] = (u + v) % 3 != 0;
            }
        }
        let a = dir.path().join("a.png");
        let b = dir.path().join("b.png");
        write_normals_png48(&nm, &a).unwrap();
        write_normals_png48(&nm, &b).unwrap();
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
        assert_eq!(
            fs::read(validity_sidecar_path(&a)).unwrap(),
            fs::read(validity_sidecar_path(&b)).unwrap()
        );
        write_normal_viz(&nm, &a).unwrap();
        write_normal_viz(&nm, &b).unwrap();
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    }

    #[test]
    fn intrinsics_json() {
        let dir = tmp();
        let path = dir.path().join("intrinsics.json");
        fs::write(
            &path,
            r#"{"fx":500,"fy":500,"cx":160,"cy":120,"width":320,"height":240}"#,
        )
        .unwrap();
        let k = read_intrinsics(&path).unwrap();
        assert_eq!(k.fx, 500.0);
        assert_eq!(k.width, 320);

        fs::write(
            &path,
            r#"{"fx":-1,"fy":500,"cx":160,"cy":120,"width":320,"height":240}"#,
        )
        .unwrap();
        assert!(matches!(read_intrinsics(&path), Err(Error::Format(_))));

        fs::write(&path, r#"{"fx":500,"fy":500,"cx":160,"width":320,"height":240}"#).unwrap();
        assert!(matches!(read_intrinsics(&path), Err(Error::Format(_))));

        assert!(matches!(
            read_intrinsics(&dir.path().join("nope.json")),
            Err(Error::Io(_))
        ));

        let k = CameraIntrinsics::new(500.0, 510.0, 160.0, 120.0, 320, 240).unwrap();
        write_intrinsics(&k, &path).unwrap();
        assert_eq!(read_intrinsics(&path).unwrap(), k);
    }

    #[test]
    fn mask_round_trip() {
        let dir = tmp();
        let path = dir.path().join("mask.png");
        let mask = Grid::from_vec(3, 2, vec![true, false, true, false, true, false]).unwrap();
        write_mask_png8(&mask, &path).unwrap();
        assert_eq!(read_mask_png8(&path).unwrap(), mask);
    }

    #[test]
    fn label_round_trip_validates_vocabulary() {
        let dir = tmp();
        let path = dir.path().join("labels.png");
        let lm = LabelMap::new(Grid::from_vec(2, 2, vec![0, 5, 13, 255]).unwrap()).unwrap();
        write_label_png8(&lm, &path).unwrap();
        assert_eq!(read_label_png8(&path).unwrap(), lm);

        let mut img: ImageBuffer<Luma<u8>, Vec<u8>> = ImageBuffer::new(1, 1);
        img.put_pixel(0, 0, Luma([99]));
        img.save(&path).unwrap();
        assert!(matches!(read_label_png8(&path), Err(Error::Label(_))));
    }
}
