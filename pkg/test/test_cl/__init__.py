"""cl 测试"""
