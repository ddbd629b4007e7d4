# LowRankQ package
