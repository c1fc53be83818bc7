"""utils 测试"""
