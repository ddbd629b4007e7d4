# Value-function analysis package
