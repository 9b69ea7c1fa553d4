pub fn add(a: usize, b: usize) -> usize {
    a + b
}
