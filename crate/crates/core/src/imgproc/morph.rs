use serde::{Deserialize, Serialize};

use super::{Raster, Semantics};
use crate::{Error, Result};

/// Odd-sized binary mask anchored at its centre.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuringElement {
    width: usize,
    height: usize,
    mask: Vec<bool>,
}

impl Default for StructuringElement {
    fn default() -> Self {
        StructuringElement::rect(3, 3).expect("3x3 is valid")
    }
}

impl StructuringElement {
    pub fn new(width: usize, height: usize, mask: Vec<bool>) -> Result<Self> {
        if width.is_multiple_of(2) || height.is_multiple_of(2) {
            return Err(Error::invalid(format!("structuring element {width}x{height} must have odd sides")));
        }
        if mask.len() != width * height {
            return Err(Error::invalid("structuring element mask has wrong length"));
        }
        if !mask[(height / 2) * width + width / 2] {
            return Err(Error::invalid("structuring element anchor must be set"));
        }
        Ok(StructuringElement { width, height, mask })
    }

    pub fn rect(width: usize, height: usize) -> Result<Self> {
        StructuringElement::new(width, height, vec![true; width * height])
    }

    /// Offsets of the set cells relative to the anchor.
    pub fn offsets(&self) -> Vec<(isize, isize)> {
        let (ax, ay) = ((self.width / 2) as isize, (self.height / 2) as isize);
        let mut out = Vec::new();
        for y in 0..self.height {
            for x in 0..self.width {
                if self.mask[y * self.width + x] {
                    out.push((x as isize - ax, y as isize - ay));
                }
            }
        }
        out
    }

    fn reach(&self) -> (usize, usize) {
        (self.width / 2, self.height / 2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MorphMode {
    Open,
    Close,
}

/// A mask on a canvas that extends the raster by a border on every side.
struct Canvas {
    w: usize,
    h: usize,
    px: usize,
    py: usize,
    cells: Vec<bool>,
}

impl Canvas {
    fn from_raster(mask: &Raster, px: usize, py: usize) -> Canvas {
        let (w, h) = (mask.width() + 2 * px, mask.height() + 2 * py);
        let mut cells = vec![false; w * h];
        for y in 0..mask.height() {
            for x in 0..mask.width() {
                cells[(y + py) * w + x + px] = mask.get(x, y) != 0;
            }
        }
        Canvas { w, h, px, py, cells }
    }

    fn at(&self, x: isize, y: isize) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.w && (y as usize) < self.h && self.cells[y as usize * self.w + x as usize]
    }

    fn erode(&self, offsets: &[(isize, isize)]) -> Canvas {
        self.map(|x, y| offsets.iter().all(|&(dx, dy)| self.at(x + dx, y + dy)))
    }

    fn dilate(&self, offsets: &[(isize, isize)]) -> Canvas {
        self.map(|x, y| offsets.iter().any(|&(dx, dy)| self.at(x - dx, y - dy)))
    }

    fn map(&self, f: impl Fn(isize, isize) -> bool) -> Canvas {
        let mut cells = vec![false; self.w * self.h];
        for y in 0..self.h {
            for x in 0..self.w {
                cells[y * self.w + x] = f(x as isize, y as isize);
            }
        }
        Canvas { cells, ..*self }
    }

    fn crop(&self, width: usize, height: usize) -> Result<Raster> {
        let mut out = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                out.push(self.cells[(y + self.py) * self.w + x + self.px]);
            }
        }
        Raster::from_mask(width, height, Semantics::Binary, &out)
    }
}

fn expect_mask(mask: &Raster) -> Result<()> {
    if !matches!(mask.semantics(), Semantics::Binary | Semantics::Edge) {
        return Err(Error::invalid(format!("morphology expects a binary mask, got {:?}", mask.semantics())));
    }
    Ok(())
}

/// Erosion; pixels outside the raster are background.
pub fn erode(mask: &Raster, se: &StructuringElement) -> Result<Raster> {
    expect_mask(mask)?;
    let (rx, ry) = se.reach();
    Canvas::from_raster(mask, rx, ry).erode(&se.offsets()).crop(mask.width(), mask.height())
}

/// Dilation by the reflected element; pixels outside the raster are background.
pub fn dilate(mask: &Raster, se: &StructuringElement) -> Result<Raster> {
    expect_mask(mask)?;
    let (rx, ry) = se.reach();
    Canvas::from_raster(mask, rx, ry).dilate(&se.offsets()).crop(mask.width(), mask.height())
}

/// Opening (erode, dilate) or closing (dilate, erode).
///
/// Both passes run on a canvas padded by the element's reach, i.e. the mask is
/// treated as a subset of the unbounded plane and the result is cropped back.
/// This keeps closing extensive and both operators idempotent at the borders.
pub fn morph(mask: &Raster, se: &StructuringElement, mode: MorphMode) -> Result<Raster> {
    expect_mask(mask)?;
    let (rx, ry) = se.reach();
    let offsets = se.offsets();
    let canvas = Canvas::from_raster(mask, 2 * rx, 2 * ry);
    let out = match mode {
        MorphMode::Open => canvas.erode(&offsets).dilate(&offsets),
        MorphMode::Close => canvas.dilate(&offsets).erode(&offsets),
    };
    out.crop(mask.width(), mask.height())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mask_from(rows: &[&str]) -> Raster {
        let h = rows.len();
        let w = rows[0].len();
        let bits: Vec<bool> = rows.iter().flat_map(|r| r.chars().map(|c| c == '#')).collect();
        Raster::from_mask(w, h, Semantics::Binary, &bits).unwrap()
    }

    /// Set-inclusion definitions evaluated pixel by pixel over a window large
    /// enough to hold every intermediate result.
    fn oracle(mask: &Raster, se: &StructuringElement, mode: MorphMode) -> Raster {
        let (w, h) = (mask.width() as isize, mask.height() as isize);
        let offs = se.offsets();
        let pad = 4isize;
        let inside = |x: isize, y: isize| x >= 0 && y >= 0 && x < w && y < h && mask.get(x as usize, y as usize) != 0;
        let eroded_in = |x: isize, y: isize| offs.iter().all(|&(dx, dy)| inside(x + dx, y + dy));
        let dilated_in = |x: isize, y: isize| offs.iter().any(|&(dx, dy)| inside(x - dx, y - dy));
        let mut bits = Vec::new();
        for y in 0..h {
            for x in 0..w {
                let v = match mode {
                    MorphMode::Open => offs.iter().any(|&(dx, dy)| eroded_in(x - dx, y - dy)),
                    MorphMode::Close => offs.iter().all(|&(dx, dy)| {
                        let (qx, qy) = (x + dx, y + dy);
                        assert!(qx > -pad && qy > -pad && qx < w + pad && qy < h + pad);
                        dilated_in(qx, qy)
                    }),
                };
                bits.push(v);
            }
        }
        Raster::from_mask(mask.width(), mask.height(), Semantics::Binary, &bits).unwrap()
    }

    #[test]
    fn opening_removes_isolated_pixel() {
        let m = mask_from(&[".....", ".....", "..#..", ".....", "....."]);
        let se = StructuringElement::default();
        let out = morph(&m, &se, MorphMode::Open).unwrap();
        assert!(out.data().iter().all(|&v| v == 0));
        assert_eq!(out, oracle(&m, &se, MorphMode::Open));
    }

    #[test]
    fn closing_fills_pinhole() {
        let m = mask_from(&[".....", ".###.", ".#.#.", ".###.", "....."]);
        let se = StructuringElement::default();
        let out = morph(&m, &se, MorphMode::Close).unwrap();
        assert_eq!(out, mask_from(&[".....", ".###.", ".###.", ".###.", "....."]));
        assert_eq!(out, oracle(&m, &se, MorphMode::Close));
    }

    #[test]
    fn empty_stays_empty() {
        let m = Raster::filled(6, 4, Semantics::Binary, 0).unwrap();
        let se = StructuringElement::default();
        for mode in [MorphMode::Open, MorphMode::Close] {
            assert_eq!(morph(&m, &se, mode).unwrap(), m);
        }
    }

    #[test]
    fn element_validation() {
        assert!(StructuringElement::rect(2, 3).is_err());
        assert!(StructuringElement::new(3, 1, vec![true, false, true]).is_err());
        assert!(StructuringElement::new(3, 1, vec![false, true, false]).is_ok());
    }

    fn random_mask() -> impl Strategy<Value = Raster> {
        (3usize..14, 3usize..14).prop_flat_map(|(w, h)| {
            proptest::collection::vec(any::<bool>(), w * h)
                .prop_map(move |bits| Raster::from_mask(w, h, Semantics::Binary, &bits).unwrap())
        })
    }

    fn subset(a: &Raster, b: &Raster) -> bool {
        a.data().iter().zip(b.data()).all(|(&x, &y)| x == 0 || y != 0)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn matches_set_definitions(m in random_mask()) {
            let se = StructuringElement::default();
            for mode in [MorphMode::Open, MorphMode::Close] {
                prop_assert_eq!(morph(&m, &se, mode).unwrap(), oracle(&m, &se, mode));
            }
        }

        #[test]
        fn open_anti_extensive_close_extensive(m in random_mask()) {
            let se = StructuringElement::default();
            prop_assert!(subset(&morph(&m, &se, MorphMode::Open).unwrap(), &m));
            prop_assert!(subset(&m, &morph(&m, &se, MorphMode::Close).unwrap()));
        }

        #[test]
        fn idempotent(m in random_mask()) {
            let se = StructuringElement::default();
            for mode in [MorphMode::Open, MorphMode::Close] {
                let once = morph(&m, &se, mode).unwrap();
                prop_assert_eq!(morph(&once, &se, mode).unwrap(), once);
            }
        }
    }
}
