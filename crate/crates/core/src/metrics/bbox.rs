//! Box extraction and overlap metrics.

use std::sync::OnceLock;

use regex::Regex;

use crate::format::answer_region;
use crate::types::Box2D;

pub fn iou(a: &Box2D, b: &Box2D) -> f64 {
    let iw = (a.x2.min(b.x2) - a.x1.max(b.x1)).max(0.0);
    let ih = (a.y2.min(b.y2) - a.y1.max(b.y1)).max(0.0);
    let inter = iw * ih;
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        (inter / union).clamp(0.0, 1.0)
    }
}

fn box_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    let num = r"\s*(-?\d+(?:\.\d+)?)\s*";
    RE.get_or_init(|| Regex::new(&format!(r"[\[(]{num},{num},{num},{num}[\])]")).unwrap())
}

/// First `[x1, y1, x2, y2]` (or parenthesized) quadruple in the answer
/// region that forms a valid box.
pub fn extract_box(text: &str) -> Option<Box2D> {
    let region = answer_region(text);
    box_re().captures_iter(&region).find_map(|c| {
        let v: Vec<f64> = (1..=4).map(|i| c[i].parse().unwrap()).collect();
        Box2D::new(v[0], v[1], v[2], v[3]).ok()
    })
}

/// Mean IoU×100 and share with IoU ≥ 0.75; a missing prediction scores 0.
pub fn bbox_metrics(cases: &[(Option<Box2D>, Box2D)]) -> (Option<f64>, Option<f64>) {
    if cases.is_empty() {
        return (None, None);
    }
    let ious: Vec<f64> = cases.iter().map(|(p, g)| p.map_or(0.0, |p| iou(&p, g))).collect();
    let n = ious.len() as f64;
    let miou = ious.iter().sum::<f64>() / n * 100.0;
    let acc = ious.iter().filter(|&&v| v >= 0.75).count() as f64 / n * 100.0;
    (Some(miou), Some(acc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn b(v: [f64; 4]) -> Box2D {
        Box2D::from(v)
    }

    #[test]
    fn hand_geometry() {
        assert_eq!(iou(&b([0.0, 0.0, 2.0, 2.0]), &b([0.0, 0.0, 2.0, 2.0])), 1.0);
        assert_eq!(iou(&b([0.0, 0.0, 1.0, 1.0]), &b([2.0, 2.0, 3.0, 3.0])), 0.0);
        assert!((iou(&b([0.0, 0.0, 2.0, 2.0]), &b([1.0, 0.0, 3.0, 2.0])) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn aggregate() {
        let g = b([0.0, 0.0, 4.0, 4.0]);
        assert_eq!(bbox_metrics(&[(Some(g), g), (Some(g), g)]), (Some(100.0), Some(100.0)));
        // 3 of 4 area shared: IoU exactly 0.75
        let p = b([0.0, 0.0, 3.0, 4.0]);
        assert_eq!(iou(&p, &g), 0.75);
        assert_eq!(bbox_metrics(&[(Some(p), g)]).1, Some(100.0));
        let half = b([0.0, 0.0, 2.0, 4.0]);
        assert_eq!(bbox_metrics(&[(Some(g), g), (Some(half), g)]), (Some(75.0), Some(50.0)));
        assert_eq!(bbox_metrics(&[(None, g)]), (Some(0.0), Some(0.0)));
        assert_eq!(bbox_metrics(&[]), (None, None));
    }

    #[test]
    fn extraction() {
        assert_eq!(extract_box("The cup is at [10, 20, 50, 60]."), Some(b([10.0, 20.0, 50.0, 60.0])));
        assert_eq!(extract_box("(1.5,2,3,4)"), Some(b([1.5, 2.0, 3.0, 4.0])));
        assert_eq!(extract_box("[5, 5, 1, 1] then [0, 0, 1, 1]"), Some(b([0.0, 0.0, 1.0, 1.0])));
        assert_eq!(extract_box("no box"), None);
    }

    fn arb_box() -> impl Strategy<Value = Box2D> {
        (-100.0f64..100.0, -100.0f64..100.0, 0.1f64..50.0, 0.1f64..50.0)
            .prop_map(|(x, y, w, h)| b([x, y, x + w, y + h]))
    }

    proptest! {
        #[test]
        fn iou_properties(a in arb_box(), c in arb_box(), dx in -20.0f64..20.0, dy in -20.0f64..20.0) {
            prop_assert!((iou(&a, &c) - iou(&c, &a)).abs() < 1e-12);
            prop_assert!((iou(&a, &a) - 1.0).abs() < 1e-12);
            let moved = iou(&a.translate(dx, dy), &c.translate(dx, dy));
            prop_assert!((moved - iou(&a, &c)).abs() < 1e-9);
            prop_assert!((0.0..=1.0).contains(&iou(&a, &c)));
        }
    }
}
