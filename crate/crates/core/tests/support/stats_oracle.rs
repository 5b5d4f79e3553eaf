//! Reference values from a 50-digit evaluation of the pooled t statistic,
//! the regularized incomplete beta p-value and Student-t quantiles.
//! Columns: xs, ys, t, two-sided p, diff CI low, diff CI high, mean(xs), CI half-width of xs.

#[allow(clippy::type_complexity, clippy::excessive_precision, clippy::approx_constant)]
pub const CASES: [(&[f64], &[f64], f64, f64, f64, f64, f64, f64); 10] = [
    (&[2.1, 2.9, 3.0, 3.8, 2.2], &[4.9, 5.1, 6.0, 5.5, 4.5], -5.9813374353507218, 0.00033019666312628462, -3.3252796693563376, -1.4747203306436624, 2.8, 0.85575785424779782),
    (&[11.0, 9.0, 13.0, 10.0, 12.0, 14.0, 8.0, 11.0, 12.0, 13.0], &[15.0, 17.0, 14.0, 16.0, 18.0, 13.0, 15.0, 16.0, 17.0, 15.0], -5.6300215680886034, 0.000024253335229813811, -5.9046057131009364, -2.6953942868990636, 11.3, 1.3509959142848623),
    (&[0.1, 0.4, 0.35, 0.2], &[0.3, 0.25, 0.5, 0.45, 0.6], -1.6609374270962836, 0.14068292222171005, -0.3817277845932809, 0.066727784593280903, 0.2625, 0.21909434424125042),
    (&[9.92, 9.88, 9.95, 9.9, 9.97, 9.91, 9.93, 9.89, 9.94, 9.96], &[9.58, 9.7, 9.41, 9.62, 9.55, 9.66, 9.5, 9.6, 9.57, 9.63], 12.31562781347551, 0.00000000033188091793465107, 0.28448765530132434, 0.40151234469867566, 9.925, 0.021658505896681696),
    (&[1.0, 2.0], &[3.0, 5.0], -2.2360679774997897, 0.15484574527148342, -7.3105119936474164, 2.3105119936474164, 1.5, 6.3531023680873523),
    (&[-3.5, -2.0, -4.1, -3.3, -2.8, -3.9], &[-3.6, -2.2, -3.0, -4.0, -3.1, -2.9], -0.33036422084944744, 0.74794187577562273, -1.0325989363122448, 0.76593226964557815, -3.2666666666666667, 0.80926844526697248),
    (&[100.5, 99.2, 101.1], &[98.7, 100.0, 99.5, 101.4, 97.9, 100.2, 99.9], 0.81382694729997219, 0.43929345966110936, -1.1175809882842903, 2.3366286073319094, 100.26666666666667, 2.4127274113031421),
    (&[0.265, 0.301, 0.244, 0.29, 0.27, 0.255, 0.281, 0.262], &[0.148, 0.21, 0.175, 0.19, 0.16, 0.201, 0.185, 0.17], 9.2126772938083122, 0.00000025541089927146664, 0.069910354061206036, 0.11233964593879396, 0.271, 0.015685142825416432),
    (&[5.0, 5.0, 5.0, 6.0], &[5.0, 6.0, 6.0, 6.0], -1.414213562373095, 0.20703125, -1.3651139814551681, 0.36511398145516811, 5.25, 0.7956115763209274),
    (&[0.001, 0.002, 0.0015, 0.003, 0.0025], &[0.0011, 0.0022, 0.0014, 0.0029, 0.0024], 0.0, 1.0, -0.0011154959823994973, 0.0011154959823994973, 0.002, 0.00098162158073877885),
];
