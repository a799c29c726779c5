use hds_core::matmul::{encode_pattern, encode_text, multiply_via_matching, BinaryMatrix};
use hds_core::strings::match_count_array;
use hds_core::SymbolString;
use proptest::prelude::*;

fn product(a: &BinaryMatrix, b: &BinaryMatrix) -> Vec<Vec<u32>> {
    (0..a.rows())
        .map(|i| (0..b.cols()).map(|j| (0..a.cols()).map(|k| (a.get(i, k) & b.get(k, j)) as u32).sum()).collect())
        .collect()
}

fn valid_shape() -> impl Strategy<Value = (usize, usize, usize)> {
    (1usize..=16, 1usize..=16, 1usize..=16).prop_filter("colliding alignments", |&(m, l, nb)| !(m >= l + 2 && nb > l))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn reduction_equals_product((m, l, nb) in valid_shape(), bits in prop::collection::vec(0u8..2, 512)) {
        let a = BinaryMatrix::new(m, l, bits[..m * l].to_vec()).unwrap();
        let b = BinaryMatrix::new(l, nb, bits[256..256 + l * nb].to_vec()).unwrap();
        prop_assert_eq!(multiply_via_matching(&a, &b).unwrap().product, product(&a, &b));
    }
}

#[test]
fn misprinted_text_keeps_single_match() {
    let a = BinaryMatrix::from_rows(&[vec![0, 0, 1], vec![1, 0, 1]]).unwrap();
    let b = BinaryMatrix::from_rows(&[vec![0, 1], vec![1, 0], vec![0, 0]]).unwrap();
    let pattern = encode_pattern(&a);
    let (_, layout) = encode_text(&b, 2).unwrap();
    let (y, d) = (layout.y, layout.dollar);
    // "$$$y2y$12y$$$": one pad symbol short, "12y" for "1yy"
    let literal = SymbolString::new(layout.alphabet(), vec![d, d, d, y, 2, y, d, 1, 2, y, d, d, d]).unwrap();
    assert_eq!(match_count_array(&pattern, &literal).unwrap().as_slice(), &[0, 0, 0, 0, 1, 0, 0, 0]);
}

#[test]
fn collision_region_is_rejected() {
    let a = BinaryMatrix::new(4, 2, vec![1; 8]).unwrap();
    let b = BinaryMatrix::new(2, 3, vec![1; 6]).unwrap();
    assert!(multiply_via_matching(&a, &b).is_err());
    let b = BinaryMatrix::new(2, 2, vec![1; 4]).unwrap();
    assert!(multiply_via_matching(&a, &b).is_ok());
}
