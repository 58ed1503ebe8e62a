use super::*;

#[test]
fn robust_penalty_closed_forms() {
    assert_eq!(robust_penalty(&[0.0, 0.0], PenaltyKind::L2Norm), 0.0);
    assert_eq!(robust_penalty(&[0.0], PenaltyKind::SmoothL1), 0.0);
    assert_eq!(robust_penalty(&[3.0, 4.0], PenaltyKind::L2Norm), 5.0);
    assert_eq!(robust_penalty(&[3.0, 4.0], PenaltyKind::L2NormSquared), 25.0);
    assert_eq!(robust_penalty(&[0.5], PenaltyKind::SmoothL1), 0.125);
    assert_eq!(robust_penalty(&[2.0], PenaltyKind::SmoothL1), 1.5);
}

fn all_valid(h: usize, w: usize) -> ValidityMask {
    ValidityMask::all_ones(h, w)
}

#[test]
fn multiscale_zero_on_perfect_prediction() {
    let gt = DenseMap::from_fn(4, 4, 2, |x, y, c| (x + y + c) as f64);
    let pyr = build_pyramid(&gt, 2, PyramidScaling::Displacement).unwrap();
    let weights = LossWeights::default();
    let loss =
        multiscale_task_loss(&pyr, &gt, &all_valid(4, 4), &weights, PenaltyKind::L2Norm).unwrap();
    assert_eq!(loss, 0.0);
}

#[test]
fn multiscale_single_level_uniform_error() {
    // Uniform flow error (3, 4) over N pixels with omega = (1) gives 5N.
    let gt = DenseMap::new(4, 4, 2);
    let pred = DenseMap::from_fn(4, 4, 2, |_, _, c| if c == 0 { 3.0 } else { 4.0 });
    let weights = LossWeights {
        omega: vec![1.0],
        ..LossWeights::default()
    };
    let loss = multiscale_task_loss(
        &[pred],
        &gt,
        &all_valid(4, 4),
        &weights,
        PenaltyKind::L2Norm,
    )
    .unwrap();
    assert!((loss - 80.0).abs() < 1e-12);
}

#[test]
fn multiscale_two_level_hand_computed() {
    // gt(x, y) = x + 4y; level-1 gt is the block means halved (displacement
    // rescaling). Offsets of 0.5 and 2.0 hit both smooth-L1 regimes.
    let gt = DenseMap::from_fn(4, 4, 1, |x, y, _| (x + 4 * y) as f64);
    let gt_pyr = build_pyramid(&gt, 2, PyramidScaling::Displacement).unwrap();
    let pred0 = DenseMap::from_fn(4, 4, 1, |x, y, _| gt_pyr[0].get(x, y, 0) + 0.5);
    let pred1 = DenseMap::from_fn(2, 2, 1, |x, y, _| gt_pyr[1].get(x, y, 0) + 2.0);
    let weights = LossWeights {
        omega: vec![1.0, 0.5],
        ..LossWeights::default()
    };
    let loss = multiscale_task_loss(
        &[pred0, pred1],
        &gt,
        &all_valid(4, 4),
        &weights,
        PenaltyKind::SmoothL1,
    )
    .unwrap();
    // Level 0: 16 * 0.125 = 2.0; level 1: 4 * 1.5 = 6.0, weighted 0.5 -> 3.0.
    assert!((loss - 5.0).abs() < 1e-12);
}

#[test]
fn multiscale_validity_excludes_partial_blocks() {
    let gt = DenseMap::constant(4, 4, 1, 1.0);
    let mut valid = all_valid(4, 4);
    valid.set_flag(0, 0, false);
    let pred0 = DenseMap::constant(4, 4, 1, 2.0);
    let pred1 = DenseMap::constant(2, 2, 1, 1.5); // gt level 1 = 0.5 -> error 1.0
    let weights = LossWeights {
        omega: vec![1.0, 1.0],
        ..LossWeights::default()
    };
    let loss = multiscale_task_loss(
        &[pred0, pred1],
        &gt,
        &valid,
        &weights,
        PenaltyKind::SmoothL1,
    )
    .unwrap();
    // Level 0: 15 valid pixels, |r| = 1 -> 0.5 each. Level 1: the block
    // containing the hole is invalid, 3 remaining pixels at 0.5 each.
    assert!((loss - (15.0 * 0.5 + 3.0 * 0.5)).abs() < 1e-12);
}

#[test]
fn multiscale_errors() {
    let gt = DenseMap::new(4, 4, 1);
    let weights = LossWeights::default();
    // Empty valid set at every level.
    let none = ValidityMask::all_zeros(4, 4);
    let pred = vec![DenseMap::new(4, 4, 1)];
    assert!(matches!(
        multiscale_task_loss(&pred, &gt, &none, &weights, PenaltyKind::L2Norm),
        Err(Error::InsufficientData(_))
    ));
    // More levels than omega weights.
    let weights1 = LossWeights {
        omega: vec![1.0],
        ..LossWeights::default()
    };
    let pyr = build_pyramid(&gt, 2, PyramidScaling::Displacement).unwrap();
    assert!(multiscale_task_loss(&pyr, &gt, &all_valid(4, 4), &weights1, PenaltyKind::L2Norm)
        .is_err());
}

#[test]
fn bce_fixed_points() {
    let eps = 1e-7;
    let h = 2;
    let w = 2;
    let near_gt = OcclusionMask::new(DenseMap::from_fn(h, w, 1, |x, _, _| {
        if x % 2 == 0 {
            eps
        } else {
            1.0 - eps
        }
    }))
    .unwrap();
    let loss = occlusion_bce(&near_gt, &near_gt, &all_valid(h, w)).unwrap();
    assert!(loss.abs() < 1e-5, "self-BCE at clamped extremes: {loss}");

    let half = OcclusionMask::constant(4, 4, 0.5).unwrap();
    let zeros = OcclusionMask::zeros(4, 4);
    let loss = occlusion_bce(&half, &zeros, &all_valid(4, 4)).unwrap();
    assert!((loss - 16.0 * std::f64::consts::LN_2).abs() < 1e-9);
}

#[test]
fn bce_random_case_matches_direct_formula() {
    let pred = OcclusionMask::new(DenseMap::from_fn(3, 3, 1, |x, y, _| {
        0.1 + 0.08 * (x + 3 * y) as f64
    }))
    .unwrap();
    let gt = OcclusionMask::new(DenseMap::from_fn(3, 3, 1, |x, y, _| {
        ((x + y) % 2) as f64
    }))
    .unwrap();
    let mut valid = all_valid(3, 3);
    valid.set_flag(1, 1, false);
    let got = occlusion_bce(&pred, &gt, &valid).unwrap();
    let mut expected = 0.0;
    for y in 0..3 {
        for x in 0..3 {
            if x == 1 && y == 1 {
                continue;
            }
            let p: f64 = pred.value(x, y);
            let g: f64 = gt.value(x, y);
            expected -= g * p.ln() + (1.0 - g) * (1.0 - p).ln();
        }
    }
    assert!((got - expected).abs() < 1e-12);
}

#[test]
fn seg_distillation_attains_teacher_entropy() {
    // Student equals the softened teacher at T = 1: the cross entropy hits
    // its lower bound, the teacher entropy.
    let logits = DenseMap::from_fn(2, 2, 3, |x, y, c| ((x + 2 * y + c) % 4) as f64 * 0.7);
    let mut student = DenseMap::new(2, 2, 3);
    let mut expected = 0.0;
    for y in 0..2 {
        for x in 0..2 {
            let z = logits.pixel(x, y);
            let mx = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = z.iter().map(|v| (v - mx).exp()).collect();
            let norm: f64 = exps.iter().sum();
            for c in 0..3 {
                let p = exps[c] / norm;
                student.set(x, y, c, p);
                expected -= p * p.ln();
            }
        }
    }
    let student = SegPosterior::new(student).unwrap();
    let got = seg_distillation(&student, &logits, 1.0, &all_valid(2, 2), false).unwrap();
    assert!((got - expected).abs() < 1e-9);
}

#[test]
fn seg_distillation_uniform_teacher_closed_form() {
    let logits = DenseMap::constant(2, 2, 4, 1.3);
    let student = SegPosterior::new(DenseMap::from_fn(2, 2, 4, |_, _, c| {
        [0.1, 0.2, 0.3, 0.4][c]
    }))
    .unwrap();
    let t = 2.0;
    let got = seg_distillation(&student, &logits, t, &all_valid(2, 2), false).unwrap();
    let per_pixel: f64 =
        -(t / 4.0) * (0.1f64.ln() + 0.2f64.ln() + 0.3f64.ln() + 0.4f64.ln());
    assert!((got - 4.0 * per_pixel).abs() < 1e-9);
}

#[test]
fn seg_distillation_random_case_oracle() {
    let logits = DenseMap::from_fn(2, 2, 3, |x, y, c| {
        ((x * 5 + y * 3 + c * 7) % 11) as f64 * 0.31 - 1.0
    });
    let student = SegPosterior::new(DenseMap::from_fn(2, 2, 3, |x, y, c| {
        let raw = [0.2, 0.5, 0.3, 0.6, 0.25, 0.15][(x + 2 * y + c) % 6];
        let total: f64 = (0..3)
            .map(|cc| [0.2, 0.5, 0.3, 0.6, 0.25, 0.15][(x + 2 * y + cc) % 6])
            .sum();
        raw / total
    }))
    .unwrap();
    let t = 1.5;
    let got = seg_distillation(&student, &logits, t, &all_valid(2, 2), false).unwrap();
    let mut expected = 0.0;
    for y in 0..2 {
        for x in 0..2 {
            let z = logits.pixel(x, y);
            let exps: Vec<f64> = z.iter().map(|v| (v / t).exp()).collect();
            let norm: f64 = exps.iter().sum();
            for c in 0..3 {
                expected -= t * exps[c] / norm * student.map().get(x, y, c).ln();
            }
        }
    }
    assert!((got - expected).abs() < 1e-9);
}

#[test]
fn seg_distillation_channel_mismatch_errors() {
    let student = SegPosterior::new(DenseMap::constant(2, 2, 2, 0.5)).unwrap();
    let logits = DenseMap::new(2, 2, 3);
    assert!(seg_distillation(&student, &logits, 1.0, &all_valid(2, 2), false).is_err());
}

#[test]
fn occlusion_distillation_zero_and_uniform() {
    let pseudo = OcclusionMask::new(DenseMap::from_fn(4, 4, 1, |x, y, _| {
        ((x + y) % 2) as f64
    }))
    .unwrap();
    let pyr_maps = build_pyramid(pseudo.map(), 2, PyramidScaling::Intensity).unwrap();
    let pyr: Vec<OcclusionMask> = pyr_maps
        .into_iter()
        .map(|m| OcclusionMask::new(m).unwrap())
        .collect();
    let weights = LossWeights::default();
    assert_eq!(occlusion_distillation(&pyr, &pseudo, &weights).unwrap(), 0.0);

    // Single level, uniform error 0.5 over N pixels -> 0.125 N.
    let pred = vec![OcclusionMask::constant(4, 4, 0.5).unwrap()];
    let gt = OcclusionMask::zeros(4, 4);
    let weights = LossWeights {
        omega: vec![1.0],
        ..LossWeights::default()
    };
    let loss = occlusion_distillation(&pred, &gt, &weights).unwrap();
    assert!((loss - 16.0 * 0.125).abs() < 1e-12);
}

#[test]
fn occlusion_distillation_two_level_hand_case() {
    let gt = OcclusionMask::new(DenseMap::from_fn(4, 4, 1, |x, _, _| {
        if x < 2 {
            0.0
        } else {
            1.0
        }
    }))
    .unwrap();
    // Level 0 prediction off by 0.25, level 1 off by 1.5.
    let gt_pyr = build_pyramid(gt.map(), 2, PyramidScaling::Intensity).unwrap();
    let pred0 =
        OcclusionMask::new(DenseMap::from_fn(4, 4, 1, |x, y, _| {
            (gt_pyr[0].get(x, y, 0) + 0.25).min(1.0)
        }))
        .unwrap();
    let pred1 = OcclusionMask::new(DenseMap::from_fn(2, 2, 1, |x, y, _| {
        (gt_pyr[1].get(x, y, 0) - 1.5).clamp(0.0, 1.0)
    }))
    .unwrap();
    let weights = LossWeights {
        omega: vec![0.4, 0.1],
        ..LossWeights::default()
    };
    let loss = occlusion_distillation(&[pred0.clone(), pred1.clone()], &gt, &weights).unwrap();
    // Hand sum: level 0 residual 0.25 everywhere except x >= 2 where the
    // clamp pins pred to 1.0 (residual 0); level 1 residuals from clamping.
    let mut expected = 0.0;
    for y in 0..4 {
        for x in 0..4 {
            let r: f64 = pred0.value(x, y) - gt_pyr[0].get(x, y, 0);
            expected += 0.4 * if r.abs() < 1.0 { 0.5 * r * r } else { r.abs() - 0.5 };
        }
    }
    for y in 0..2 {
        for x in 0..2 {
            let r: f64 = pred1.value(x, y) - gt_pyr[1].get(x, y, 0);
            expected += 0.1 * if r.abs() < 1.0 { 0.5 * r * r } else { r.abs() - 0.5 };
        }
    }
    assert!((loss - expected).abs() < 1e-12);
}

#[test]
fn regularizer_cases() {
    let weights = LossWeights::default();
    let zeros = OcclusionMask::zeros(4, 4);
    assert_eq!(occlusion_regularization(&zeros, &zeros, &weights), 0.0);

    // O_F = 1 over N pixels, O_D = 0, beta_F = 0.5 -> 0.5 N.
    let ones = OcclusionMask::constant(4, 4, 1.0).unwrap();
    let loss = occlusion_regularization(&ones, &zeros, &weights);
    assert!((loss - 0.5 * 16.0).abs() < 1e-12);

    let of = OcclusionMask::new(DenseMap::from_fn(3, 3, 1, |x, y, _| {
        (x as f64 * 0.1 + y as f64 * 0.07).min(1.0)
    }))
    .unwrap();
    let od = OcclusionMask::new(DenseMap::from_fn(3, 3, 1, |x, y, _| {
        ((x * y) as f64 * 0.05).min(1.0)
    }))
    .unwrap();
    let direct: f64 = 0.5 * od.map().data().iter().sum::<f64>()
        + 0.5 * of.map().data().iter().sum::<f64>();
    assert!((occlusion_regularization(&of, &od, &weights) - direct).abs() < 1e-12);
}

#[test]
fn consistency_monotone_in_occlusion_and_regularizer_increasing() {
    // Raising any occlusion entry cannot increase the consistency loss and
    // strictly increases the regularizer: the trivial-solution tension.
    let i1 = DenseMap::from_fn(6, 6, 1, |x, y, _| 0.5 + 0.04 * ((x * y) % 5) as f64);
    let i2 = DenseMap::from_fn(6, 6, 1, |x, y, _| 0.5 + 0.05 * ((x + y) % 4) as f64);
    let flow = FlowField::constant(6, 6, 0.4, 0.2);
    let low = OcclusionMask::constant(6, 6, 0.2).unwrap();
    let mut raised = low.map().clone();
    raised.set(2, 3, 0, 0.9);
    let high = OcclusionMask::new(raised).unwrap();

    let weights = LossWeights::default();
    let pc_low = photometric_consistency(&i1, &i2, FieldRef::Flow(&flow), &low).unwrap();
    let pc_high = photometric_consistency(&i1, &i2, FieldRef::Flow(&flow), &high).unwrap();
    assert!(pc_high <= pc_low);

    let zeros = OcclusionMask::zeros(6, 6);
    let reg_low = occlusion_regularization(&low, &zeros, &weights);
    let reg_high = occlusion_regularization(&high, &zeros, &weights);
    assert!(reg_high > reg_low);
}

fn textured(h: usize, w: usize, phase: f64) -> DenseMap {
    DenseMap::from_fn(h, w, 1, |x, y, _| {
        0.5 + 0.2 * (0.37 * x as f64 + 0.23 * y as f64 + phase).sin()
    })
}

fn posterior(h: usize, w: usize, bias: f64) -> SegPosterior {
    SegPosterior::new(DenseMap::from_fn(h, w, 2, |x, y, c| {
        let p = 0.3 + 0.2 * (0.3 * x as f64 + 0.41 * y as f64 + bias).sin().abs();
        if c == 0 {
            p
        } else {
            1.0 - p
        }
    }))
    .unwrap()
}

struct Fixture {
    gt_flow: DenseMap,
    gt_disp: DenseMap,
    i1: DenseMap,
    i2: DenseMap,
    il: DenseMap,
    ir: DenseMap,
    flow: FlowField,
    disp: DisparityMap,
    occ_f: OcclusionMask,
    occ_d: OcclusionMask,
    seg1: SegPosterior,
    seg2: SegPosterior,
    logits: DenseMap,
    pseudo_of: OcclusionMask,
    pseudo_od: OcclusionMask,
}

impl Fixture {
    fn new() -> Self {
        let h = 16;
        let w = 16;
        Self {
            gt_flow: DenseMap::from_fn(h, w, 2, |x, y, c| {
                if c == 0 {
                    0.5 + 0.01 * x as f64
                } else {
                    -0.25 + 0.01 * y as f64
                }
            }),
            gt_disp: DenseMap::from_fn(h, w, 1, |x, _, _| 2.0 + 0.05 * x as f64),
            i1: textured(h, w, 0.0),
            i2: textured(h, w, 0.8),
            il: textured(h, w, 0.3),
            ir: textured(h, w, 1.2),
            flow: FlowField::constant(h, w, 0.4, -0.2),
            disp: DisparityMap::constant(h, w, 0.8).unwrap(),
            occ_f: OcclusionMask::constant(h, w, 0.25).unwrap(),
            occ_d: OcclusionMask::constant(h, w, 0.1).unwrap(),
            seg1: posterior(h, w, 0.0),
            seg2: posterior(h, w, 0.5),
            logits: DenseMap::from_fn(h, w, 2, |x, y, c| 0.2 * ((x + y + c) % 5) as f64),
            pseudo_of: OcclusionMask::constant(h, w, 0.3).unwrap(),
            pseudo_od: OcclusionMask::constant(h, w, 0.15).unwrap(),
        }
    }
}

#[test]
fn semi_supervised_total_matches_term_composition() {
    let f = Fixture::new();
    let weights = LossWeights::default();
    let valid = all_valid(16, 16);

    let flow_pyr = build_pyramid(&f.gt_flow, 2, PyramidScaling::Displacement).unwrap();
    let flow_pred: Vec<DenseMap> = flow_pyr
        .iter()
        .map(|m| DenseMap::from_fn(m.height(), m.width(), 2, |x, y, c| m.get(x, y, c) + 0.3))
        .collect();
    let disp_pyr = build_pyramid(&f.gt_disp, 2, PyramidScaling::Displacement).unwrap();
    let disp_pred: Vec<DenseMap> = disp_pyr
        .iter()
        .map(|m| DenseMap::from_fn(m.height(), m.width(), 1, |x, y, c| m.get(x, y, c) + 0.6))
        .collect();
    let occ_pyr_f = vec![
        OcclusionMask::constant(16, 16, 0.5).unwrap(),
        OcclusionMask::constant(8, 8, 0.4).unwrap(),
    ];
    let occ_pyr_d = vec![
        OcclusionMask::constant(16, 16, 0.2).unwrap(),
        OcclusionMask::constant(8, 8, 0.35).unwrap(),
    ];
    let student = posterior(16, 16, 0.9);

    let inputs = SemiSupervisedInputs {
        flow_supervision: Some(Supervision {
            pred_pyramid: &flow_pred,
            gt: &f.gt_flow,
            valid: &valid,
        }),
        disp_supervision: Some(Supervision {
            pred_pyramid: &disp_pred,
            gt: &f.gt_disp,
            valid: &valid,
        }),
        flow_occ_pyramid: Some(&occ_pyr_f),
        flow_occ_pseudo_gt: Some(&f.pseudo_of),
        disp_occ_pyramid: Some(&occ_pyr_d),
        disp_occ_pseudo_gt: Some(&f.pseudo_od),
        student_seg: Some(&student),
        teacher_logits: Some(&f.logits),
        seg_valid: None,
        image1: Some(&f.i1),
        image2: Some(&f.i2),
        image_left: Some(&f.il),
        image_right: Some(&f.ir),
        flow: Some(&f.flow),
        disparity: Some(&f.disp),
        occ_flow: Some(&f.occ_f),
        occ_disp: Some(&f.occ_d),
        seg1: Some(&f.seg1),
        seg2: Some(&f.seg2),
        seg_left: Some(&f.seg1),
        seg_right: Some(&f.seg2),
    };

    let report = total_semi_supervised(&inputs, &weights).unwrap();
    assert_eq!(report.term_count(), 9);

    // Compositional oracle: invoke every term operation directly.
    let l_f = multiscale_task_loss(&flow_pred, &f.gt_flow, &valid, &weights, PenaltyKind::L2Norm)
        .unwrap();
    let l_d =
        multiscale_task_loss(&disp_pred, &f.gt_disp, &valid, &weights, PenaltyKind::SmoothL1)
            .unwrap();
    let l_ofd = occlusion_distillation(&occ_pyr_f, &f.pseudo_of, &weights).unwrap();
    let l_odd = occlusion_distillation(&occ_pyr_d, &f.pseudo_od, &weights).unwrap();
    let l_sd = seg_distillation(&student, &f.logits, weights.temperature, &valid, false).unwrap();
    let l_pc = photometric_consistency(&f.il, &f.ir, FieldRef::Disparity(&f.disp), &f.occ_d)
        .unwrap()
        + photometric_consistency(&f.i1, &f.i2, FieldRef::Flow(&f.flow), &f.occ_f).unwrap();
    let l_sc = semantic_consistency(&f.seg1, &f.seg2, FieldRef::Disparity(&f.disp), &f.occ_d)
        .unwrap()
        + semantic_consistency(&f.seg1, &f.seg2, FieldRef::Flow(&f.flow), &f.occ_f).unwrap();
    let l_ss = ssim_loss(
        &f.i1, &f.i2, &f.flow, &f.occ_f, &f.il, &f.ir, &f.disp, &f.occ_d, &weights,
    )
    .unwrap();
    let l_reg = occlusion_regularization(&f.occ_f, &f.occ_d, &weights);

    let expected = l_f
        + l_d
        + weights.alpha_occ * (l_ofd + l_odd)
        + weights.alpha_seg * l_sd
        + weights.alpha_photo * l_pc
        + weights.alpha_semantic * l_sc
        + l_ss
        + l_reg;
    assert!(
        (report.total - expected).abs() < 1e-9,
        "total {} vs composed {}",
        report.total,
        expected
    );
    assert!((report.total - report.recompute_total(&weights)).abs() < 1e-9);
}

#[test]
fn semi_supervised_perfect_inputs_give_zero_total() {
    let h = 16;
    let w = 16;
    let gt_flow = DenseMap::constant(h, w, 2, 0.0);
    let gt_disp = DenseMap::constant(h, w, 1, 1.5);
    let valid = all_valid(h, w);
    let flow_pyr = build_pyramid(&gt_flow, 2, PyramidScaling::Displacement).unwrap();
    let disp_pyr = build_pyramid(&gt_disp, 2, PyramidScaling::Displacement).unwrap();
    let img = textured(h, w, 0.0);
    let zeros_f = FlowField::zeros(h, w);
    let zero_occ = OcclusionMask::zeros(h, w);
    let zero_disp = DisparityMap::zeros(h, w);

    let inputs = SemiSupervisedInputs {
        flow_supervision: Some(Supervision {
            pred_pyramid: &flow_pyr,
            gt: &gt_flow,
            valid: &valid,
        }),
        disp_supervision: Some(Supervision {
            pred_pyramid: &disp_pyr,
            gt: &gt_disp,
            valid: &valid,
        }),
        image1: Some(&img),
        image2: Some(&img),
        image_left: Some(&img),
        image_right: Some(&img),
        flow: Some(&zeros_f),
        disparity: Some(&zero_disp),
        occ_flow: Some(&zero_occ),
        occ_disp: Some(&zero_occ),
        ..Default::default()
    };
    let report = total_semi_supervised(&inputs, &LossWeights::default()).unwrap();
    assert!(report.total.abs() < 1e-12, "total = {}", report.total);
}

#[test]
fn semi_supervised_single_term_bundle() {
    let of = OcclusionMask::constant(8, 8, 0.5).unwrap();
    let od = OcclusionMask::constant(8, 8, 0.25).unwrap();
    let inputs = SemiSupervisedInputs {
        occ_flow: Some(&of),
        occ_disp: Some(&od),
        ..Default::default()
    };
    let weights = LossWeights::default();
    let report = total_semi_supervised(&inputs, &weights).unwrap();
    assert_eq!(report.term_count(), 1);
    let expected = occlusion_regularization(&of, &od, &weights);
    assert_eq!(report.regularization, Some(expected));
    assert_eq!(report.total, expected);
}

#[test]
fn semi_supervised_empty_bundle_errors() {
    let inputs = SemiSupervisedInputs::default();
    assert!(matches!(
        total_semi_supervised(&inputs, &LossWeights::default()),
        Err(Error::InsufficientData(_))
    ));
}

#[test]
fn pretrain_perfect_predictions_are_zero() {
    let gt_flow = DenseMap::constant(8, 8, 2, 1.0);
    let gt_disp = DenseMap::constant(8, 8, 1, 3.0);
    let valid = all_valid(8, 8);
    let flow_pyr = build_pyramid(&gt_flow, 2, PyramidScaling::Displacement).unwrap();
    let disp_pyr = build_pyramid(&gt_disp, 2, PyramidScaling::Displacement).unwrap();
    let inputs = PretrainInputs {
        flow_supervision: Some(Supervision {
            pred_pyramid: &flow_pyr,
            gt: &gt_flow,
            valid: &valid,
        }),
        disp_supervision: Some(Supervision {
            pred_pyramid: &disp_pyr,
            gt: &gt_disp,
            valid: &valid,
        }),
        ..Default::default()
    };
    let report = pretrain_supervised(&inputs, &LossWeights::default()).unwrap();
    assert_eq!(report.total, 0.0);
    assert_eq!(report.flow_occlusion, None);
    assert_eq!(report.disp_occlusion, None);
}

#[test]
fn pretrain_without_occlusion_gt_is_flow_plus_quarter_disparity() {
    let gt_flow = DenseMap::new(8, 8, 2);
    let gt_disp = DenseMap::constant(8, 8, 1, 2.0);
    let valid = all_valid(8, 8);
    let flow_pred = vec![DenseMap::from_fn(8, 8, 2, |_, _, c| {
        if c == 0 {
            3.0
        } else {
            4.0
        }
    })];
    let disp_pred = vec![DenseMap::constant(8, 8, 1, 2.5)];
    let weights = LossWeights {
        omega: vec![1.0],
        ..LossWeights::default()
    };
    let inputs = PretrainInputs {
        flow_supervision: Some(Supervision {
            pred_pyramid: &flow_pred,
            gt: &gt_flow,
            valid: &valid,
        }),
        disp_supervision: Some(Supervision {
            pred_pyramid: &disp_pred,
            gt: &gt_disp,
            valid: &valid,
        }),
        ..Default::default()
    };
    let report = pretrain_supervised(&inputs, &weights).unwrap();
    let l_f = 64.0 * 5.0;
    let l_d = 64.0 * 0.125;
    assert!((report.total - (l_f + 0.25 * l_d)).abs() < 1e-9);
    assert_eq!(report.flow_occlusion, None);
}

#[test]
fn pretrain_hand_built_bundle_with_occlusions() {
    let gt_flow = DenseMap::new(4, 4, 2);
    let gt_disp = DenseMap::constant(4, 4, 1, 1.0);
    let valid = all_valid(4, 4);
    let flow_pred = vec![DenseMap::from_fn(4, 4, 2, |_, _, c| {
        if c == 0 {
            0.6
        } else {
            0.8
        }
    })];
    let disp_pred = vec![DenseMap::constant(4, 4, 1, 1.5)];
    let occ_f_pred = vec![OcclusionMask::constant(4, 4, 0.3).unwrap()];
    let occ_f_gt = OcclusionMask::zeros(4, 4);
    let occ_d_pred = vec![OcclusionMask::constant(4, 4, 0.5).unwrap()];
    let occ_d_gt = OcclusionMask::constant(4, 4, 1.0).unwrap();
    let weights = LossWeights {
        omega: vec![1.0],
        ..LossWeights::default()
    };
    let inputs = PretrainInputs {
        flow_supervision: Some(Supervision {
            pred_pyramid: &flow_pred,
            gt: &gt_flow,
            valid: &valid,
        }),
        disp_supervision: Some(Supervision {
            pred_pyramid: &disp_pred,
            gt: &gt_disp,
            valid: &valid,
        }),
        flow_occ_pyramid: Some(&occ_f_pred),
        flow_occ_gt: Some(&occ_f_gt),
        disp_occ_pyramid: Some(&occ_d_pred),
        disp_occ_gt: Some(&occ_d_gt),
        ..Default::default()
    };
    let report = pretrain_supervised(&inputs, &weights).unwrap();
    let l_f = 16.0 * 1.0; // |(0.6, 0.8)| = 1
    let l_of = -16.0 * 0.7f64.ln(); // BCE(0.3, 0)
    let l_d = 16.0 * 0.125; // smooth_l1(0.5)
    let l_od = -16.0 * 0.5f64.ln(); // BCE(0.5, 1)
    let expected = (l_f + l_of) + 0.25 * (l_d + l_od);
    assert!((report.total - expected).abs() < 1e-9);
}

#[test]
fn pretrain_requires_some_ground_truth() {
    assert!(matches!(
        pretrain_supervised(&PretrainInputs::default(), &LossWeights::default()),
        Err(Error::InsufficientData(_))
    ));
}

#[test]
fn weights_parse_from_key_value_text() {
    let text = r#"
omega = [0.32, 0.08]
alpha_occ = 0.05
temperature = 2.0
per_pixel_normalization = true
"#;
    let w: LossWeights = toml::from_str(text).unwrap();
    assert_eq!(w.omega, vec![0.32, 0.08]);
    assert_eq!(w.temperature, 2.0);
    assert!(w.per_pixel_normalization);
    // Unspecified keys fall back to defaults.
    assert_eq!(w.beta_flow, 0.5);
    w.validate().unwrap();
}
