//! Newcomb's 1882 speed-of-light measurements, recorded as deviations
//! from 24,800 nanoseconds. Stored as (value, count) pairs and expanded
//! at load to avoid transcription drift.

/// The 23 unique measured values with their repetition counts; 66
/// observations in total.
pub const DATA: [(i32, u32); 23] = [
    (-44, 1),
    (-2, 1),
    (16, 2),
    (19, 1),
    (20, 1),
    (21, 2),
    (22, 2),
    (23, 3),
    (24, 5),
    (25, 5),
    (26, 5),
    (27, 6),
    (28, 7),
    (29, 5),
    (30, 3),
    (31, 2),
    (32, 5),
    (33, 2),
    (34, 1),
    (36, 4),
    (37, 1),
    (39, 1),
    (40, 1),
];

/// The full 66-point sample in ascending order.
pub fn expanded() -> Vec<f64> {
    DATA.iter()
        .flat_map(|&(v, c)| std::iter::repeat(v as f64).take(c as usize))
        .collect()
}
