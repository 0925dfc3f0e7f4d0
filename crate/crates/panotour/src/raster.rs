//! Raster files: 8-bit RGB PNG for color, raw little-endian `f32` with an
//! 8-byte `(width, height)` header for depth and tables, color-coded 8-bit
//! PNG for semantics and 16-bit PNG for normals.

use std::io::Write;
use std::path::Path;

use image::{ImageBuffer, Rgb, RgbImage};
use panotour_core::gaussians::{PanoImage, Provenance};
use panotour_core::panocam::CpropeTable;
use panotour_core::scenegraph::{GeometricProxy, SurfaceClass};

use crate::error::{io_err, Error, Result};

/// Row-major `f32` raster.
#[derive(Clone, Debug, PartialEq)]
pub struct FloatRaster {
    pub width: u32,
    pub height: u32,
    pub data: Vec<f32>,
}

impl FloatRaster {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + 4 * self.data.len());
        out.extend_from_slice(&self.width.to_le_bytes());
        out.extend_from_slice(&self.height.to_le_bytes());
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, String> {
        if bytes.len() < 8 {
            return Err("raster shorter than its header".into());
        }
        let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
        let (width, height) = (word(0), word(4));
        let n = width as usize * height as usize;
        if bytes.len() != 8 + 4 * n {
            return Err(format!("expected {} bytes for {width}x{height}, found {}", 8 + 4 * n, bytes.len()));
        }
        let data = bytes[8..].chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
        Ok(FloatRaster { width, height, data })
    }
}

pub fn write_float(path: &Path, raster: &FloatRaster) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(io_err(path))?;
    f.write_all(&raster.to_bytes()).map_err(io_err(path))
}

pub fn read_float(path: &Path) -> Result<FloatRaster> {
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    FloatRaster::from_bytes(&bytes).map_err(|message| Error::Parse { path: path.to_path_buf(), message })
}

pub fn depth_raster(width: usize, height: usize, depth: impl IntoIterator<Item = f32>) -> FloatRaster {
    FloatRaster { width: width as u32, height: height as u32, data: depth.into_iter().collect() }
}

/// Cosine/sine table of the horizontal harmonics: one row per token column,
/// `2 * pairs` values per row.
pub fn cprope_raster(table: &CpropeTable) -> FloatRaster {
    let mut data = Vec::with_capacity(table.width_tokens * table.pairs * 2);
    for x in 0..table.width_tokens {
        for m in 1..=table.pairs {
            let [c, s] = table.horizontal(m, x);
            data.push(c as f32);
            data.push(s as f32);
        }
    }
    FloatRaster { width: (table.pairs * 2) as u32, height: table.width_tokens as u32, data }
}

fn save_png<P, C>(path: &Path, img: &ImageBuffer<P, C>) -> Result<()>
where
    P: image::PixelWithColorType,
    [P::Subpixel]: image::EncodableLayout,
    C: std::ops::Deref<Target = [P::Subpixel]>,
{
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|source| Error::Image { path: path.to_path_buf(), source })
}

pub fn write_color(path: &Path, pano: &PanoImage) -> Result<()> {
    let img = RgbImage::from_fn(pano.width as u32, pano.height as u32, |x, y| {
        Rgb(pano.color[y as usize * pano.width + x as usize])
    });
    save_png(path, &img)
}

/// Reads an 8-bit color panorama; pixels equal to the invalid marker are
/// flagged invalid.
pub fn read_color(path: &Path) -> Result<PanoImage> {
    let img = image::open(path).map_err(|source| Error::Image { path: path.to_path_buf(), source })?.to_rgb8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let mut pano = PanoImage::new(w, h, [0; 3], Provenance::External)?;
    for (i, p) in img.pixels().enumerate() {
        pano.color[i] = p.0;
        pano.valid[i] = p.0 != panotour_core::gaussians::INVALID_COLOR;
    }
    Ok(pano)
}

fn class_color(class: SurfaceClass) -> u8 {
    match class {
        SurfaceClass::Wall => 200,
        SurfaceClass::Floor => 120,
        SurfaceClass::Ceiling => 60,
        SurfaceClass::Opening => 255,
    }
}

/// Red encodes the surface class, green the room id; black means no hit.
pub fn write_semantics(path: &Path, proxy: &GeometricProxy) -> Result<()> {
    let img = RgbImage::from_fn(proxy.width as u32, proxy.height as u32, |x, y| {
        match proxy.semantics[proxy.index(x as usize, y as usize)] {
            Some(s) => Rgb([class_color(s.class), s.room.min(254) as u8 + 1, 0]),
            None => Rgb([0, 0, 0]),
        }
    });
    save_png(path, &img)
}

/// Normals mapped to `(n + 1) / 2 * 65535` per channel.
pub fn write_normals(path: &Path, proxy: &GeometricProxy) -> Result<()> {
    let enc = |v: f64| ((v + 1.0) * 0.5 * 65535.0).round().clamp(0.0, 65535.0) as u16;
    let img: ImageBuffer<Rgb<u16>, Vec<u16>> =
        ImageBuffer::from_fn(proxy.width as u32, proxy.height as u32, |x, y| {
            let n = proxy.normals[proxy.index(x as usize, y as usize)];
            Rgb([enc(n.x), enc(n.y), enc(n.z)])
        });
    save_png(path, &img)
}

/// Writes depth, semantics and normals as `<stem>_depth.f32`,
/// `<stem>_semantic.png` and `<stem>_normal.png`.
pub fn write_proxy(dir: &Path, stem: &str, proxy: &GeometricProxy) -> Result<()> {
    let depth = depth_raster(proxy.width, proxy.height, proxy.depth.iter().map(|&d| d as f32));
    write_float(&dir.join(format!("{stem}_depth.f32")), &depth)?;
    write_semantics(&dir.join(format!("{stem}_semantic.png")), proxy)?;
    write_normals(&dir.join(format!("{stem}_normal.png")), proxy)
}
