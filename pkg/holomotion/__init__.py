# Holomorphic motions of finite point sets: validation, monodromy, covering lifts, extension
