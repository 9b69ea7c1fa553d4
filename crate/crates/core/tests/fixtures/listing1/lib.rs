struct St1 { ptr: *mut u8, len: usize }
struct St2 { pub ptr: *mut u8, pub len: usize }
impl St1 {
    pub fn from(p: *mut u8, l: usize) -> St1 {
        St1 { ptr: p, len: l }
    }
    pub fn set_len(&mut self, l:usize) {
        self.len = l;
    }
    pub unsafe fn get(&self) -> &[u8] {
        slice::from_raw_parts(self.ptr, self.len)
    }
}
impl St2 {
    pub unsafe fn from(p: *mut u8, l: usize) -> St2 {
        St2 { ptr: p, len: l }
    }
    pub unsafe fn set_len(&mut self, l:usize) {
        self.len = l;
    }
    pub fn get(&self, x: usize) -> u8 {
        if x < self.len {
            unsafe { *self.ptr.offset(x as isize) }
        } else {
            0
        }
    }
}
fn f1(v: Vec<u8>) {
    let (p,l,_c) = v.into_raw_parts();
    let s1 = St1::from(p, l); 
    f2(); 
}
fn f2() {
    let mut v = vec![1,2,3];
    let (p,l,_c) = v.into_raw_parts();
    let s2 = unsafe { St2::from(p, 0)};
    unsafe { s2.set_len(p, l)};
    let t2 = s2.get(0);
}
