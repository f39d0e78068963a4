//! Connected components of binary masks under 8-connectivity, largest-blob
//! extraction, and salt-and-pepper cleanup.

use crate::imaging::BinaryMask;

const NEIGHBORS: [(isize, isize); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

/// Component ids for every pixel of a mask.
///
/// Label 0 is background. Components are numbered from 1 in the order a
/// row-major scan first touches them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentLabeling {
    width: usize,
    height: usize,
    labels: Vec<u32>,
    sizes: Vec<usize>,
}

impl ComponentLabeling {
    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    /// Pixel counts; `sizes()[i]` belongs to label `i + 1`.
    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn component_count(&self) -> usize {
        self.sizes.len()
    }

    pub fn label_at(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    /// Label of the biggest component, smallest label on ties.
    pub fn largest(&self) -> Option<(u32, usize)> {
        let mut best: Option<(u32, usize)> = None;
        for (i, &size) in self.sizes.iter().enumerate() {
            if best.is_none_or(|(_, s)| size > s) {
                best = Some((i as u32 + 1, size));
            }
        }
        best
    }

    /// Mask holding exactly the pixels of `label`.
    pub fn component_mask(&self, label: u32) -> BinaryMask {
        let bits = self
            .labels
            .iter()
            .map(|&l| l == label && label != 0)
            .collect();
        BinaryMask::new(self.width, self.height, bits).expect("labeling has mask dimensions")
    }
}

/// Labels the 8-connected components of `mask`.
///
/// Flood fill with an explicit stack, so frame-sized blobs never recurse.
pub fn label_components(mask: &BinaryMask) -> ComponentLabeling {
    let (width, height) = mask.dimensions();
    let bits = mask.bits();
    let mut labels = vec![0u32; bits.len()];
    let mut sizes = Vec::new();
    let mut stack = Vec::new();

    for start in 0..bits.len() {
        if !bits[start] || labels[start] != 0 {
            continue;
        }
        let label = sizes.len() as u32 + 1;
        let mut size = 0;
        labels[start] = label;
        stack.push(start);
        while let Some(idx) = stack.pop() {
            size += 1;
            let (x, y) = ((idx % width) as isize, (idx / width) as isize);
            for (dx, dy) in NEIGHBORS {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= width as isize || ny >= height as isize {
                    continue;
                }
                let n = ny as usize * width + nx as usize;
                if bits[n] && labels[n] == 0 {
                    labels[n] = label;
                    stack.push(n);
                }
            }
        }
        sizes.push(size);
    }

    ComponentLabeling {
        width,
        height,
        labels,
        sizes,
    }
}

/// Keeps only the largest 8-connected component and returns it with its
/// pixel count. When several components tie, the one found first in
/// row-major order wins. An empty mask yields an empty mask and size 0.
pub fn largest_component(mask: &BinaryMask) -> (BinaryMask, usize) {
    let labeling = label_components(mask);
    match labeling.largest() {
        Some((label, size)) => (labeling.component_mask(label), size),
        None => (
            BinaryMask::filled(mask.width(), mask.height(), false).expect("mask is non-empty"),
            0,
        ),
    }
}

fn disagreement_filter(mask: &BinaryMask, min_disagreeing: usize) -> BinaryMask {
    let (width, height) = mask.dimensions();
    let mut bits = Vec::with_capacity(width * height);
    for y in 0..height as isize {
        for x in 0..width as isize {
            let here = mask.get_or_false(x, y);
            let disagree = NEIGHBORS
                .iter()
                .filter(|(dx, dy)| mask.get_or_false(x + dx, y + dy) != here)
                .count();
            bits.push(if disagree >= min_disagreeing {
                !here
            } else {
                here
            });
        }
    }
    BinaryMask::new(width, height, bits).expect("same dimensions as input")
}

/// Removes salt-and-pepper noise from a mask.
///
/// A pixel flips when at least 6 of its 8 neighbors hold the opposite value;
/// neighbors outside the frame count as `false`. Isolated specks and
/// single-pixel holes disappear, while the convex corner of a solid region
/// (5 disagreeing neighbors) survives.
pub fn denoise(mask: &BinaryMask) -> BinaryMask {
    disagreement_filter(mask, 6)
}

/// Plain 3x3 boolean median: each pixel becomes the majority of its 9-cell
/// neighborhood, with out-of-frame cells counted as `false`.
///
/// Unlike [`denoise`] this shaves the corners off rectangles.
pub fn median3x3(mask: &BinaryMask) -> BinaryMask {
    disagreement_filter(mask, 5)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask(rows: &[&str]) -> BinaryMask {
        let rows: Vec<Vec<bool>> = rows
            .iter()
            .map(|r| r.chars().map(|c| c == '#').collect())
            .collect();
        BinaryMask::from_rows(&rows).unwrap()
    }

    #[test]
    fn diagonal_pixels_connect() {
        let l = label_components(&mask(&["#.", ".#"]));
        assert_eq!(l.sizes(), &[2]);
    }

    #[test]
    fn empty_mask_has_no_components() {
        let m = BinaryMask::filled(5, 3, false).unwrap();
        assert_eq!(label_components(&m).component_count(), 0);
        let (out, size) = largest_component(&m);
        assert_eq!((out, size), (m, 0));
    }

    fn cross_and_bar() -> BinaryMask {
        // 5-pixel cross centered at (1,1); 3-pixel vertical bar at x=6, y=0..3.
        mask(&[
            ".#....#.", //
            "###...#.", ".#....#.", "........", "........", "........", "........", "........",
        ])
    }

    #[test]
    fn cross_and_bar_components() {
        let l = label_components(&cross_and_bar());
        assert_eq!(l.sizes(), &[5, 3]);
        assert_eq!(l.label_at(1, 0), 1);
        assert_eq!(l.label_at(6, 0), 2);
        let (out, size) = largest_component(&cross_and_bar());
        assert_eq!(size, 5);
        assert!(!out.get(6, 1));
        assert!(out.get(1, 1) && out.get(0, 1) && out.get(2, 1));
        assert_eq!(out.count(), 5);
    }

    #[test]
    fn full_mask_is_one_component() {
        let m = BinaryMask::filled(4, 4, true).unwrap();
        assert_eq!(largest_component(&m), (m, 16));
    }

    #[test]
    fn ties_keep_first_component() {
        let m = mask(&["##..##", "......", "...##."]);
        let (out, size) = largest_component(&m);
        assert_eq!(size, 2);
        assert!(out.get(0, 0) && out.get(1, 0));
        assert_eq!(out.count(), 2);
    }

    #[test]
    fn labeling_survives_large_blobs() {
        let m = BinaryMask::filled(1024, 1024, true).unwrap();
        assert_eq!(label_components(&m).sizes(), &[1024 * 1024]);
    }

    #[test]
    fn denoise_removes_salt_and_fills_pepper() {
        let salt = mask(&[".....", ".....", "..#..", ".....", "....."]);
        assert!(denoise(&salt).is_empty());
        let pepper = mask(&["#####", "#####", "##.##", "#####", "#####"]);
        assert!(denoise(&pepper).get(2, 2));
    }

    #[test]
    fn denoise_keeps_rectangles_median_does_not() {
        let mut m = BinaryMask::filled(12, 12, false).unwrap();
        for y in 3..8 {
            for x in 2..9 {
                m.set(x, y, true);
            }
        }
        assert_eq!(denoise(&m), m);
        let median = median3x3(&m);
        assert!(!median.get(2, 3));
        assert_eq!(median.count(), m.count() - 4);
    }

    #[test]
    fn filters_preserve_dimensions() {
        let m = mask(&["#.#", "...", "##.", "..."]);
        assert_eq!(denoise(&m).dimensions(), (3, 4));
        assert_eq!(median3x3(&m).dimensions(), (3, 4));
        assert_eq!(largest_component(&m).0.dimensions(), (3, 4));
    }
}
