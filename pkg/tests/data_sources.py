"""Small inline .ark programs shared by several test modules."""

SMALL = """
lang small {
  node-type(1, sum) A {
    attr k = real[0, 10] const
    attr m = real[0, 10]
    init(0) real[-1, 1]
  }
  edge-type W {}
  prod(e:W, s:A->s:A) s <= -s.k*s.m*var(s)
}
"""

CONST_SRC = {
    "ok": SMALL + """
func fixed-k() uses small {
  node a : A
  set-attr a.k = 2
  set-attr a.m = 1
  set-init a(0) = 0.5
}
""",
    "bad": SMALL + """
func bad-k(x : real[0, 10]) uses small {
  node a : A
  set-attr a.k = x
  set-attr a.m = 1
  set-init a(0) = 0
}
""",
}

SWITCH_SRC = """
lang sw {
  node-type(1, sum) A { init(0) real[-1, 1] }
  edge-type W {}
  edge-type fixed Fx {}
  prod(e:W, s:A->t:A) t <= var(s)
}

func toggle(flag : int[0, 1]) uses sw {
  node a : A
  node b : A
  edge<a, b> e : W
  edge<b, a> never : W
  set-init a(0) = 1
  set-init b(0) = 0
  set-edge e when flag == 1
  set-edge e when flag > 5
}
"""
