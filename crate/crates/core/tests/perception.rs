use logidroid_core::device::hierarchy::{parse_hierarchy, render_hierarchy};
use logidroid_core::device::{
    describe_state, DeviceBackend, DeviceError, DeviceSession, Gesture, HierarchyDump,
};
use logidroid_core::model::{ActionKind, Bounds, WidgetAttrs, WidgetDescriptor};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A screen that never changes.
struct Still(Vec<WidgetDescriptor>);

impl DeviceBackend for Still {
    fn dump_hierarchy(&mut self) -> Result<HierarchyDump, DeviceError> {
        let raw = render_hierarchy("com.example.still", &self.0);
        Ok(HierarchyDump {
            widgets: parse_hierarchy(&raw)?,
            raw,
        })
    }

    fn screenshot(&mut self) -> Result<Option<Vec<u8>>, DeviceError> {
        Ok(None)
    }

    fn perform(&mut self, _: &Gesture) -> Result<(), DeviceError> {
        Ok(())
    }

    fn current_app(&mut self) -> Result<String, DeviceError> {
        Ok("still".into())
    }
}

/// Coordinates come from a coarse grid so that equal tops and lefts are common.
fn random_layout(rng: &mut ChaCha8Rng) -> Vec<WidgetDescriptor> {
    let n = rng.gen_range(1..=25);
    (0..n)
        .map(|i| {
            let left = rng.gen_range(0..6) * 100;
            let top = rng.gen_range(0..8) * 100;
            let right = left + rng.gen_range(1..4) * 50;
            let bottom = top + rng.gen_range(1..4) * 40;
            let attrs = match rng.gen_range(0..3) {
                0 => WidgetAttrs::text(format!("label {i}")),
                1 => WidgetAttrs::content_desc(format!("icon {i}")),
                _ => WidgetAttrs::resource_id(format!("view_{i}")),
            };
            let ops: Vec<ActionKind> = if rng.gen_bool(0.5) {
                vec![ActionKind::Click]
            } else {
                vec![]
            };
            WidgetDescriptor::new(attrs, ops, Bounds::new(left, top, right, bottom))
        })
        .collect()
}

/// Insertion sort by top then left; ties broken by right edge, then by
/// position in the dump.
fn oracle_order(widgets: &[WidgetDescriptor]) -> Vec<String> {
    let mut out: Vec<(i32, i32, i32, usize, String)> = Vec::new();
    for (i, w) in widgets.iter().enumerate() {
        let item = (
            w.bounds.top,
            w.bounds.left,
            w.bounds.right,
            i,
            w.attrs.display_name(),
        );
        let pos = out
            .iter()
            .position(|o| (o.0, o.1, o.2, o.3) > (item.0, item.1, item.2, item.3))
            .unwrap_or(out.len());
        out.insert(pos, item);
    }
    out.into_iter().map(|o| o.4).collect()
}

#[test]
fn ordering_matches_oracle_on_random_layouts() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for trial in 0..1000 {
        let layout = random_layout(&mut rng);
        let mut session = DeviceSession::new(Box::new(Still(layout.clone())));
        let state = session.perceive().unwrap().clone();
        let got: Vec<String> = state
            .widgets
            .iter()
            .map(|w| w.attrs.display_name())
            .collect();
        assert_eq!(got, oracle_order(&layout), "trial {trial}");

        // Ids are positions in that order, and rendering is byte-stable.
        for (id, line) in state.description.lines().enumerate() {
            assert!(line.starts_with(&format!("widget {id}: ")));
        }
        assert_eq!(describe_state(&state), state.description);
        let again = session.perceive().unwrap().clone();
        assert_eq!(again.description.as_bytes(), state.description.as_bytes());
        assert_eq!(again.widgets, state.widgets);
    }
}

proptest! {
    #[test]
    fn distinct_corners_sort_by_top_then_left(
        corners in proptest::collection::btree_set((0i32..2000, 0i32..1000), 1..30),
        shuffle_seed in any::<u64>(),
    ) {
        use rand::seq::SliceRandom;
        let mut corners: Vec<(i32, i32)> = corners.into_iter().collect();
        corners.shuffle(&mut ChaCha8Rng::seed_from_u64(shuffle_seed));
        let layout: Vec<WidgetDescriptor> = corners
            .iter()
            .map(|&(top, left)| {
                WidgetDescriptor::new(
                    WidgetAttrs::text(format!("{top}:{left}")),
                    [ActionKind::Click],
                    Bounds::new(left, top, left + 10, top + 10),
                )
            })
            .collect();
        let mut session = DeviceSession::new(Box::new(Still(layout)));
        let state = session.perceive().unwrap().clone();
        let got: Vec<(i32, i32)> = state.widgets.iter().map(|w| (w.bounds.top, w.bounds.left)).collect();
        let mut expected = corners.clone();
        expected.sort();
        prop_assert_eq!(got, expected);
    }
}

#[test]
fn undescribable_and_degenerate_widgets_are_dropped() {
    let layout = vec![
        WidgetDescriptor::new(
            WidgetAttrs::new("", "", ""),
            [ActionKind::Click],
            Bounds::new(0, 0, 10, 10),
        ),
        WidgetDescriptor::new(WidgetAttrs::text("inverted"), [], Bounds::new(10, 0, 0, 10)),
        WidgetDescriptor::new(WidgetAttrs::text("kept"), [], Bounds::new(0, 0, 10, 10)),
    ];
    let mut session = DeviceSession::new(Box::new(Still(layout)));
    let state = session.perceive().unwrap();
    assert_eq!(state.widgets.len(), 1);
    assert_eq!(state.widgets[0].attrs.text, "kept");
}

#[test]
fn empty_screen_is_reported_after_one_retry() {
    let mut session = DeviceSession::new(Box::new(Still(vec![])));
    assert!(matches!(
        session.perceive_with_retry(),
        Err(DeviceError::EmptyScreen)
    ));
    assert!(session.history().is_empty());
}
