use proptest::prelude::*;
use srf_core::skeleton::{
    read_jsonl, synth_generate, validate_sequence, write_jsonl, ActionSequence, JsonlError, RawFrame, RawSequence,
    SkeletonError, SkeletonFrame, SynthError, SynthSpec,
};

fn finite_f32() -> impl Strategy<Value = f32> {
    prop_oneof![
        -10.0f32..10.0,
        any::<f32>().prop_filter("finite", |v| v.is_finite()),
        Just(0.0f32),
        Just(-0.0f32),
        Just(f32::MIN_POSITIVE),
    ]
}

fn sequence_strategy() -> impl Strategy<Value = ActionSequence> {
    (
        4usize..8,
        3usize..6,
        2usize..=3,
        0usize..10,
        "[a-z][a-z0-9]{0,4}",
        "t[0-9]{1,2}",
    )
        .prop_flat_map(|(joints, frames, dim, label, subject, trial)| {
            prop::collection::vec(prop::collection::vec(finite_f32(), joints * dim), frames).prop_map(move |coords| {
                let frames = coords
                    .into_iter()
                    .enumerate()
                    .map(|(i, c)| SkeletonFrame::new(i, dim, c).unwrap())
                    .collect();
                ActionSequence::new(subject.clone(), label, trial.clone(), frames).unwrap()
            })
        })
}

fn bits(seqs: &[ActionSequence]) -> Vec<Vec<u32>> {
    seqs.iter()
        .flat_map(|s| {
            s.frames()
                .iter()
                .map(|f| f.coords().iter().map(|c| c.to_bits()).collect())
        })
        .collect()
}

proptest! {
    #[test]
    fn read_inverts_write(seqs in prop::collection::vec(sequence_strategy(), 0..4)) {
        // Distinct keys so that grouping cannot merge two sequences.
        let seqs: Vec<ActionSequence> = seqs
            .into_iter()
            .enumerate()
            .map(|(i, s)| ActionSequence::new(format!("{}{i}", s.subject_id()), s.label(), s.trial_id(), s.frames().to_vec()).unwrap())
            .collect();
        let mut buf = Vec::new();
        write_jsonl(&mut buf, &seqs).unwrap();
        let back = read_jsonl(buf.as_slice()).unwrap();
        prop_assert_eq!(bits(&back), bits(&seqs));
        prop_assert_eq!(back, seqs);
    }

    #[test]
    fn validation_is_all_or_nothing(seq in sequence_strategy(), frame in 0usize..3, joint in 0usize..4) {
        let mut raw = RawSequence {
            subject: seq.subject_id().to_string(),
            action: seq.label(),
            trial: seq.trial_id().to_string(),
            frames: seq
                .frames()
                .iter()
                .map(|f| RawFrame {
                    index: f.index(),
                    joints: f.joints().map(|j| j.iter().map(|&c| c as f64).collect()).collect(),
                })
                .collect(),
        };
        let snapshot = raw.clone();
        prop_assert_eq!(validate_sequence(&raw).unwrap(), seq);
        prop_assert_eq!(&raw, &snapshot);
        raw.frames[frame].joints[joint][1] = f64::NAN;
        prop_assert_eq!(
            validate_sequence(&raw).unwrap_err(),
            SkeletonError::NonFiniteCoordinate { frame, joint, axis: 1 }
        );
    }
}

#[test]
fn coordinates_keep_nine_significant_digits() {
    let awkward = [0.1f32, 1.0 / 3.0, 123_456.79, 1e-7, -2.718_281_7, f32::MAX];
    let coords: Vec<f32> = awkward.iter().cycle().take(12).copied().collect();
    let frames = (0..3)
        .map(|i| SkeletonFrame::new(i, 3, coords.clone()).unwrap())
        .collect();
    let seq = ActionSequence::new("s1", 0, "t1", frames).unwrap();
    let mut buf = Vec::new();
    write_jsonl(&mut buf, std::slice::from_ref(&seq)).unwrap();
    assert_eq!(read_jsonl(buf.as_slice()).unwrap(), vec![seq]);
}

#[test]
fn malformed_line_number_is_reported() {
    let mut buf = Vec::new();
    let seq = synth_generate(&SynthSpec::well_separated(2), 1, 1, 8, 1)
        .unwrap()
        .remove(0);
    write_jsonl(&mut buf, &[seq]).unwrap();
    let mut text = String::from_utf8(buf).unwrap();
    let pos = text.match_indices('\n').nth(5).unwrap().0 + 1;
    text.insert_str(pos, "not json\n");
    match read_jsonl(text.as_bytes()) {
        Err(JsonlError::MalformedRecord { line, .. }) => assert_eq!(line, 7),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn synthetic_corpus_shape_and_determinism() {
    let spec = SynthSpec::well_separated(3);
    let a = synth_generate(&spec, 5, 5, 40, 7).unwrap();
    assert_eq!(a.len(), 75);
    assert!(a.iter().all(|s| s.len() == 40 && s.joint_count() == 25 && s.dim() == 3));
    let b = synth_generate(&spec, 5, 5, 40, 7).unwrap();
    let (mut ja, mut jb) = (Vec::new(), Vec::new());
    write_jsonl(&mut ja, &a).unwrap();
    write_jsonl(&mut jb, &b).unwrap();
    assert_eq!(ja, jb);
    let c = synth_generate(&spec, 5, 5, 40, 8).unwrap();
    assert_ne!(bits(&a), bits(&c));
}

#[test]
fn synthetic_classes_differ_in_mahalanobis_space() {
    use srf_core::mahalanobis::MahalanobisMatrix;
    let seqs = synth_generate(&SynthSpec::well_separated(3), 1, 1, 30, 2).unwrap();
    let ms: Vec<_> = seqs
        .iter()
        .map(|s| MahalanobisMatrix::from_sequence(s, 1e-6).unwrap())
        .collect();
    for i in 0..3 {
        for j in i + 1..3 {
            let diff: f64 = ms[i]
                .values()
                .iter()
                .zip(ms[j].values())
                .map(|(a, b)| (a - b).abs())
                .sum();
            let size: f64 = ms[i].values().iter().sum();
            assert!(diff > 0.05 * size, "classes {i} and {j} nearly coincide");
        }
    }
}

#[test]
fn synth_rejects_bad_requests() {
    assert!(matches!(
        synth_generate(&SynthSpec::well_separated(1), 1, 1, 10, 0),
        Err(SynthError::InvalidSpec(_))
    ));
    assert!(matches!(
        synth_generate(&SynthSpec::well_separated(2), 1, 1, 2, 0),
        Err(SynthError::InvalidSpec(_))
    ));
}
