use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use uavcache::channel::{gain_matrix, link_rate};
use uavcache::dpt2::{
    interference_upper_bound, linearized_power_rate, linearized_trajectory_rate, pair_dist_lower,
    sq_dist_lower,
};
use uavcache::harness::UserMobility;
use uavcache::lyapunov::{aut_solve, update_queues};
use uavcache::paoi::{accumulated_intensity, exact_pmf, expected_paoi, queue_step, PaoiParams};
use uavcache::solver::solve_assignment;
use uavcache::{ExperimentConfig, LyapunovParams, Position2D, VirtualQueues};

fn pos() -> impl Strategy<Value = Position2D> {
    (0.0..500.0f64, 0.0..500.0f64).prop_map(|(x, y)| Position2D::new(x, y))
}

fn paoi(load: f64, n_c: u64, q: usize) -> PaoiParams {
    PaoiParams {
        packet_bits: 40_000.0,
        content_bits: 150e6,
        n_c,
        vartheta_w: vec![load * n_c as f64; q],
        request_prob: vec![0.25; 4],
        users: 4,
        uavs: 2,
        slot_s: 9.7,
    }
}

proptest! {
    #[test]
    fn squared_distance_bound_is_below_and_tight(x in pos(), xr in pos(), u in pos()) {
        let lower = sq_dist_lower(&x, &xr, &u);
        prop_assert!(lower <= x.distance_sq(&u) + 1e-9 * (1.0 + x.distance_sq(&u)));
        prop_assert!((sq_dist_lower(&xr, &xr, &u) - xr.distance_sq(&u)).abs() < 1e-7);
    }

    #[test]
    fn pair_distance_bound_is_below(a in pos(), b in pos(), ar in pos(), br in pos()) {
        let exact = a.distance_sq(&b);
        prop_assert!(pair_dist_lower(&a, &b, &ar, &br) <= exact + 1e-9 * (1.0 + exact));
    }

    #[test]
    fn power_linearization_brackets_the_rate(
        gains in prop::collection::vec(1e-13..1e-9f64, 2..5),
        raw_p in prop::collection::vec(1.0..480.0f64, 5),
        raw_pr in prop::collection::vec(1.0..480.0f64, 5),
        serve in 0usize..5,
    ) {
        let j = gains.len();
        let (p, pr, serve) = (&raw_p[..j], &raw_pr[..j], serve % j);
        let noise = 4e-10;
        let interference = (noise + (0..j).filter(|&k| k != serve).map(|k| p[k] * gains[k]).sum::<f64>()).log2();
        let upper = interference_upper_bound(&gains, p, pr, serve, noise);
        prop_assert!(upper >= interference - 1e-9);
        let exact = link_rate(&gains, p, serve, noise);
        prop_assert!(linearized_power_rate(&gains, p, pr, serve, noise) <= exact + 1e-9);
    }

    #[test]
    fn trajectory_linearization_is_below_the_rate(
        x in prop::collection::vec(pos(), 3),
        xr in prop::collection::vec(pos(), 3),
        p in prop::collection::vec(1.0..480.0f64, 3),
        user in pos(),
        serve in 0usize..3,
    ) {
        let net = ExperimentConfig::default().network().unwrap();
        let gains = gain_matrix(&x, &[user], &net.radio);
        let exact = link_rate(&gains[0], &p, serve, net.radio.noise_power());
        if let Some(lin) = linearized_trajectory_rate(&x, &xr, &p, &user, serve, &net) {
            prop_assert!(lin <= exact + 1e-9, "{lin} > {exact}");
        }
        let tight = linearized_trajectory_rate(&xr, &xr, &p, &user, serve, &net).unwrap();
        let at_r = link_rate(&gain_matrix(&xr, &[user], &net.radio)[0], &p, serve, net.radio.noise_power());
        prop_assert!((tight - at_r).abs() < 1e-9);
    }

    #[test]
    fn aut_stays_in_range(z in prop::collection::vec(-5.0..5.0f64, 1..20), v in 0.0..10.0f64, u_max in 0.1..30.0f64) {
        for g in aut_solve(&z, v, u_max) {
            prop_assert!((0.0..=u_max).contains(&g));
        }
    }

    #[test]
    fn queues_follow_their_arrivals(
        q in prop::collection::vec(-2.0..2.0f64, 3),
        rates in prop::collection::vec(0.0..5.0f64, 3),
        c_th in prop::collection::vec(0.0..5.0f64, 3),
        p in prop::collection::vec(0.0..500.0f64, 2),
    ) {
        let qs = VirtualQueues { q: q.clone(), z: q.clone(), h: vec![0.0; 2] };
        let params = LyapunovParams { v: 0.01, rho: 0.1, phi: 0.5 };
        let next = update_queues(&qs, &c_th, &rates, &p, &c_th, &params, &[450.0; 2]).unwrap();
        for i in 0..3 {
            let served_enough = rates[i] >= params.phi * c_th[i];
            prop_assert_eq!(next.q[i] <= q[i], served_enough);
            prop_assert!((next.z[i] - (q[i] + c_th[i] - rates[i])).abs() < 1e-12);
        }
        for (h, pk) in next.h.iter().zip(&p) {
            prop_assert_eq!(*h > 0.0, *pk > 450.0);
        }
    }

    #[test]
    fn assignment_is_a_partial_matching(
        cost in prop::collection::vec(prop::collection::vec(prop::option::weighted(0.8, 0.0..10.0f64), 4), 1..7),
    ) {
        let cost: Vec<Vec<f64>> = cost
            .into_iter()
            .map(|r| r.into_iter().map(|c| c.unwrap_or(f64::NEG_INFINITY)).collect())
            .collect();
        let s = solve_assignment(&cost, 4).unwrap();
        prop_assert!(s.is_partial_matching());
        for (i, srv) in s.servers().into_iter().enumerate() {
            if let Some(j) = srv {
                prop_assert!(cost[i][j].is_finite());
            }
        }
    }

    #[test]
    fn queue_step_is_a_clamped_difference(a in 0u64..1000, w in 0u64..1000, n_c in 1u64..100) {
        let next = queue_step(a, w, n_c);
        prop_assert_eq!(next as i64, (a as i64 + w as i64 - n_c as i64).max(0));
    }

    #[test]
    fn pmf_is_a_distribution(load in 0.0..1.5f64, n_c in 1u64..40, q in 1usize..12) {
        let pmf = exact_pmf(&paoi(load, n_c, q), q, None).unwrap();
        prop_assert!(pmf.mass.iter().all(|&p| p >= 0.0));
        prop_assert!(!pmf.flagged);
        prop_assert!((pmf.mass.iter().sum::<f64>() + pmf.deficit - 1.0).abs() < 1e-9);
    }

    #[test]
    fn expected_paoi_moves_the_right_way(load in 0.1..1.5f64, n_c in 2u64..40, q in 2usize..20, bump in 0.01..5.0f64) {
        let params = paoi(load, n_c, q);
        let theta = accumulated_intensity(&params, q);
        let base = expected_paoi(&params, q, 2, 0, &theta).unwrap();
        let mut more_backlog = theta.clone();
        more_backlog[q - 1] += bump;
        prop_assert!(expected_paoi(&params, q, 2, 0, &more_backlog).unwrap() > base);
        // same arrivals per interval, faster preprocessing
        let mut faster = params.clone();
        faster.n_c += 1;
        prop_assert!(expected_paoi(&faster, q, 2, 0, &theta).unwrap() < base);
        let mut busier = params.clone();
        busier.vartheta_w.iter_mut().for_each(|v| *v += bump);
        prop_assert!(expected_paoi(&busier, q, 2, 0, &theta).unwrap() < base);
    }

    #[test]
    fn users_stay_inside_the_area(seed in any::<u64>(), speed in 0.0..30.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut users: Vec<Position2D> = (0..5).map(|i| Position2D::new(100.0 * i as f64, 499.0)).collect();
        let mut m = UserMobility::new(5, speed, 9.7, 500.0, 500.0, &mut rng);
        for _ in 0..200 {
            let before = users.clone();
            m.step(&mut users, &mut rng);
            for (u, b) in users.iter().zip(&before) {
                prop_assert!((0.0..=500.0).contains(&u.x) && (0.0..=500.0).contains(&u.y));
                prop_assert!(u.distance(b) <= speed * 9.7 + 1e-9);
            }
        }
    }
}
