# Linear algebra package
