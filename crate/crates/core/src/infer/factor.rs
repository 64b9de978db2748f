/// Table over discrete variables; the first variable varies fastest.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Factor {
    pub vars: Vec<usize>,
    pub card: Vec<usize>,
    pub values: Vec<f64>,
}

impl Factor {
    pub fn scalar(v: f64) -> Self {
        Factor {
            vars: Vec::new(),
            card: Vec::new(),
            values: vec![v],
        }
    }

    fn strides(&self) -> Vec<usize> {
        let mut s = Vec::with_capacity(self.card.len());
        let mut acc = 1;
        for &c in &self.card {
            s.push(acc);
            acc *= c;
        }
        s
    }

    pub fn contains(&self, v: usize) -> bool {
        self.vars.contains(&v)
    }

    pub fn product(&self, other: &Factor) -> Factor {
        let mut vars = self.vars.clone();
        let mut card = self.card.clone();
        for (i, &v) in other.vars.iter().enumerate() {
            if !vars.contains(&v) {
                vars.push(v);
                card.push(other.card[i]);
            }
        }
        let size: usize = card.iter().product();
        // stride of every result variable inside each operand (0 if absent)
        let stride_in = |f: &Factor| -> Vec<usize> {
            let fs = f.strides();
            vars.iter()
                .map(|v| f.vars.iter().position(|x| x == v).map_or(0, |i| fs[i]))
                .collect()
        };
        let (sa, sb) = (stride_in(self), stride_in(other));
        let mut values = Vec::with_capacity(size);
        let mut digits = vec![0usize; vars.len()];
        let (mut ia, mut ib) = (0usize, 0usize);
        for _ in 0..size {
            values.push(self.values[ia] * other.values[ib]);
            for d in 0..digits.len() {
                digits[d] += 1;
                ia += sa[d];
                ib += sb[d];
                if digits[d] < card[d] {
                    break;
                }
                ia -= sa[d] * card[d];
                ib -= sb[d] * card[d];
                digits[d] = 0;
            }
        }
        Factor { vars, card, values }
    }

    pub fn sum_out(&self, v: usize) -> Factor {
        let Some(pos) = self.vars.iter().position(|&x| x == v) else {
            return self.clone();
        };
        let strides = self.strides();
        let (stride, c) = (strides[pos], self.card[pos]);
        let mut vars = self.vars.clone();
        let mut card = self.card.clone();
        vars.remove(pos);
        card.remove(pos);
        let size: usize = card.iter().product();
        let mut values = vec![0.0; size];
        for (i, &x) in self.values.iter().enumerate() {
            let low = i % stride;
            let high = i / (stride * c);
            values[low + high * stride] += x;
        }
        Factor { vars, card, values }
    }

    /// Restricts `v` to `level` and drops it.
    pub fn reduce(&self, v: usize, level: usize) -> Factor {
        let Some(pos) = self.vars.iter().position(|&x| x == v) else {
            return self.clone();
        };
        let strides = self.strides();
        let (stride, c) = (strides[pos], self.card[pos]);
        let mut vars = self.vars.clone();
        let mut card = self.card.clone();
        vars.remove(pos);
        card.remove(pos);
        let size: usize = card.iter().product();
        let mut values = Vec::with_capacity(size);
        for j in 0..size {
            let low = j % stride;
            let high = j / stride;
            values.push(self.values[low + level * stride + high * stride * c]);
        }
        Factor { vars, card, values }
    }
}
