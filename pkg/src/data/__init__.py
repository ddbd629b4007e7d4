# Result storage package
